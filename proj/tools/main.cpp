#include "eisen/errors.hpp"
#include "eisen/rational_solve.hpp"
#include "eisen/rootdata.hpp"
#include "eisen/sl2.hpp"
#include "eisen/specfn.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

using eisen::cd;
using nlohmann::json;
namespace sl2 = eisen::sl2;
namespace mc = eisen::merocont;
namespace rd = eisen::rootdata;

namespace {

/*
 * Configuration plumbing.  A run configuration is the library Sl2Config
 * plus nothing else; it is read from a flat key = value file with dotted
 * section prefixes (grid.*, kernel.*, continuation.*), then overridden by
 * command-line flags.  Unknown keys are rejected so a typo cannot silently
 * fall back to a default.  The effective configuration is echoed into every
 * output artifact together with the RNG seed.
 */

std::vector<cd> parse_cd_list(const std::string& text) {
    std::vector<cd> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ';')) {
        if (item.empty()) continue;
        double re = 0.0, im = 0.0;
        size_t comma = item.find(',');
        re = std::stod(item.substr(0, comma));
        if (comma != std::string::npos) im = std::stod(item.substr(comma + 1));
        out.emplace_back(re, im);
    }
    return out;
}

std::string format_cd_list(const std::vector<cd>& v) {
    std::string out;
    for (const cd& z : v) {
        if (!out.empty()) out += ";";
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.17g,%.17g", z.real(), z.imag());
        out += buf;
    }
    return out;
}

void apply_config_entry(sl2::Sl2Config& cfg, const std::string& key,
                        const std::string& value) {
    auto num = [&] { return std::stod(value); };
    auto integer = [&] { return std::stoi(value); };
    if (key == "grid.c") cfg.c = num();
    else if (key == "grid.c0") cfg.c0_request = num();
    else if (key == "grid.y_max") cfg.y_max = num();
    else if (key == "grid.nx") cfg.nx = integer();
    else if (key == "grid.ny") cfg.ny = integer();
    else if (key == "grid.N") cfg.N = num();
    else if (key == "kernel.radius") cfg.kernel_radius = num();
    else if (key == "kernel.shape") cfg.kernel_sharpness = num();
    else if (key == "continuation.anchor") cfg.witness_anchor = num();
    else if (key == "continuation.unq_samples") cfg.unq_samples = parse_cd_list(value);
    else if (key == "continuation.probe_grid") cfg.probe_grid = parse_cd_list(value);
    else if (key == "continuation.rank_tol") cfg.rank_tol = num();
    else if (key == "continuation.residual_tol") cfg.residual_tol = num();
    else if (key == "continuation.denom_floor") cfg.denom_floor = num();
    else if (key == "continuation.fit_rel_tol") cfg.fit_rel_tol = num();
    else if (key == "continuation.fit_y_lo") cfg.fit_y_lo = num();
    else if (key == "continuation.fit_y_hi_frac") cfg.fit_y_hi_frac = num();
    else if (key == "continuation.n_covectors") cfg.n_covectors = integer();
    else if (key == "continuation.n_cusp_guard") cfg.n_cusp_guard = integer();
    else if (key == "continuation.seed") cfg.seed = std::stoul(value);
    else
        throw eisen::ConfigError("config: unknown key '" + key + "'");
}

std::string trimmed(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    size_t b = s.find_last_not_of(" \t\r");
    return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
}

void load_config_file(sl2::Sl2Config& cfg, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw eisen::ConfigError("config: cannot open '" + path + "'");
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string t = trimmed(line);
        if (t.empty() || t[0] == '#') continue;
        size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw eisen::ConfigError("config: line " + std::to_string(lineno) +
                                     " of '" + path + "' is not key = value");
        std::string key = trimmed(t.substr(0, eq));
        std::string value = trimmed(t.substr(eq + 1));
        try {
            apply_config_entry(cfg, key, value);
        } catch (const std::invalid_argument&) {
            throw eisen::ConfigError("config: bad value for '" + key + "' at line " +
                                     std::to_string(lineno));
        }
    }
}

// ordered so the echo is stable across runs
std::vector<std::pair<std::string, std::string>> config_entries(
    const sl2::Sl2Config& cfg) {
    auto f = [](double x) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.17g", x);
        return std::string(buf);
    };
    return {
        {"grid.c", f(cfg.c)},
        {"grid.c0", f(cfg.c0_request)},
        {"grid.y_max", f(cfg.y_max)},
        {"grid.nx", std::to_string(cfg.nx)},
        {"grid.ny", std::to_string(cfg.ny)},
        {"grid.N", f(cfg.N)},
        {"kernel.radius", f(cfg.kernel_radius)},
        {"kernel.shape", f(cfg.kernel_sharpness)},
        {"continuation.anchor", f(cfg.witness_anchor)},
        {"continuation.unq_samples", format_cd_list(cfg.unq_samples)},
        {"continuation.probe_grid", format_cd_list(cfg.probe_grid)},
        {"continuation.rank_tol", f(cfg.rank_tol)},
        {"continuation.residual_tol", f(cfg.residual_tol)},
        {"continuation.denom_floor", f(cfg.denom_floor)},
        {"continuation.fit_rel_tol", f(cfg.fit_rel_tol)},
        {"continuation.fit_y_lo", f(cfg.fit_y_lo)},
        {"continuation.fit_y_hi_frac", f(cfg.fit_y_hi_frac)},
        {"continuation.n_covectors", std::to_string(cfg.n_covectors)},
        {"continuation.n_cusp_guard", std::to_string(cfg.n_cusp_guard)},
        {"continuation.seed", std::to_string(cfg.seed)},
    };
}

json config_json(const sl2::Sl2Config& cfg) {
    json j = json::object();
    for (const auto& [k, v] : config_entries(cfg)) j[k] = v;
    return j;
}

void echo_config_comments(FILE* out, const sl2::Sl2Config& cfg) {
    for (const auto& [k, v] : config_entries(cfg))
        std::fprintf(out, "# %s = %s\n", k.c_str(), v.c_str());
}

cd parse_complex(const std::string& text) {
    size_t comma = text.find(',');
    double re = std::stod(text.substr(0, comma));
    double im = comma == std::string::npos ? 0.0 : std::stod(text.substr(comma + 1));
    return {re, im};
}

json cd_json(cd z) { return json::array({z.real(), z.imag()}); }

// shared state threaded through the subcommand callbacks
struct Cli {
    sl2::Sl2Config cfg;
    std::string config_path;
    bool emit_json = false;
    int exit_code = 0;
};

/*
 * eval: one Eisenstein series value by direct summation, with its rigorous
 * tail bound.  The sum runs at the reduced representative, so passing any
 * point of an orbit gives bit-identical output.
 */
void run_eval(Cli& cli, const std::string& zs, const std::string& ss, int M,
              double tol) {
    cd z = parse_complex(zs);
    cd s = parse_complex(ss);
    if (z.imag() <= 0.0) throw eisen::DomainError("eval: z must satisfy Im z > 0");
    sl2::HPoint zp{z.real(), z.imag()};
    sl2::SeriesValue val = M > 0 ? sl2::eisenstein_series(zp, s, M)
                                 : sl2::eisenstein_series_auto(zp, s, tol);
    if (cli.emit_json) {
        json j{{"schema", "eisencont/eval/1"},
               {"z", cd_json(z)},
               {"s", cd_json(s)},
               {"M", M},
               {"tol", tol},
               {"value", cd_json(val.value)},
               {"tail_bound", val.tail_bound},
               {"config", config_json(cli.cfg)}};
        std::printf("%s\n", j.dump(2).c_str());
    } else {
        echo_config_comments(stdout, cli.cfg);
        std::printf("E(z; s) at z = %.17g + %.17gi, s = %.17g + %.17gi\n", z.real(),
                    z.imag(), s.real(), s.imag());
        std::printf("value      = %.17g + %.17gi\n", val.value.real(),
                    val.value.imag());
        std::printf("tail bound = %.3e\n", val.tail_bound);
    }
}

/*
 * mscan: continue E across a list or rectangle of parameter values and
 * compare the extracted m with the closed form.  One continuation instance
 * is built for the whole scan; rows that fail are recorded in the note
 * column instead of aborting (unless --strict).  Rows where the denominator
 * dips well below its calibration scale are flagged pole-proximity.
 */
struct ScanRow {
    cd s;
    std::optional<cd> m_est, m_closed;
    std::optional<double> abs_err, denom_abs, max_residual;
    std::string note;
};

void run_mscan(Cli& cli, const std::string& points, double re_min, double re_max,
               int re_n, double im_min, double im_max, int im_n, bool strict,
               const std::string& out_path) {
    std::vector<cd> pts;
    if (!points.empty()) {
        pts = parse_cd_list(points);
    } else if (re_n > 0) {
        int imn = std::max(im_n, 1);
        for (int j = 0; j < imn; ++j)
            for (int i = 0; i < re_n; ++i) {
                double re = re_n == 1 ? re_min
                                      : re_min + (re_max - re_min) * i / (re_n - 1);
                double im = imn == 1 ? im_min
                                     : im_min + (im_max - im_min) * j / (imn - 1);
                pts.emplace_back(re, im);
            }
    }
    if (pts.empty())
        throw CLI::ValidationError("mscan",
                                   "no scan points: give --points or --re-n > 0");

    auto t0 = std::chrono::steady_clock::now();
    sl2::EisensteinContinuation cont(cli.cfg);
    std::fprintf(stderr, "# continuation ready in %.1fs (witness rank %d)\n",
                 std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                     .count(),
                 cont.witness_rank());

    bool hard_failure = false;
    std::vector<ScanRow> rows;
    for (cd s : pts) {
        ScanRow row;
        row.s = s;
        cd d = cont.solution().denominator(s);
        row.denom_abs = std::abs(d);
        if (std::abs(d) < 0.1 * cont.solution().denominator_scale())
            row.note = "pole-proximity";
        try {
            sl2::ContinuationResult res = cont.run(s);
            row.m_est = res.m_estimate;
            row.max_residual = res.residuals.overall();
        } catch (const eisen::DomainError& e) {
            row.note = row.note.empty() ? e.what() : row.note + "; " + e.what();
            if (strict) throw;
        } catch (const eisen::Error& e) {
            // convergence or fit failure: a real defect, not a known pole
            row.note = row.note.empty() ? e.what() : row.note + "; " + e.what();
            hard_failure = true;
            if (strict) throw;
        }
        try {
            row.m_closed = eisen::specfn::m_closed(s);
        } catch (const eisen::DomainError&) {
            // closed form has its own poles; leave the column empty
        }
        if (row.m_est && row.m_closed)
            row.abs_err = std::abs(*row.m_est - *row.m_closed);
        rows.push_back(std::move(row));
    }

    FILE* out = stdout;
    if (!out_path.empty()) {
        out = std::fopen(out_path.c_str(), "w");
        if (!out) throw eisen::ConfigError("mscan: cannot open '" + out_path + "'");
    }
    if (cli.emit_json) {
        json jrows = json::array();
        for (const ScanRow& r : rows) {
            json jr{{"s", cd_json(r.s)}, {"note", r.note}};
            jr["m_est"] = r.m_est ? cd_json(*r.m_est) : json();
            jr["m_closed"] = r.m_closed ? cd_json(*r.m_closed) : json();
            jr["abs_err"] = r.abs_err ? json(*r.abs_err) : json();
            jr["denom_abs"] = r.denom_abs ? json(*r.denom_abs) : json();
            jr["max_residual"] = r.max_residual ? json(*r.max_residual) : json();
            jrows.push_back(std::move(jr));
        }
        json j{{"schema", "eisencont/mscan/1"},
               {"config", config_json(cli.cfg)},
               {"rows", jrows}};
        std::fprintf(out, "%s\n", j.dump(2).c_str());
    } else {
        echo_config_comments(out, cli.cfg);
        std::fprintf(out, "s_re,s_im,m_est_re,m_est_im,m_closed_re,m_closed_im,"
                          "abs_err,denom_abs,max_residual,note\n");
        auto opt = [](const std::optional<double>& x) {
            if (!x) return std::string();
            char buf[64];
            std::snprintf(buf, sizeof buf, "%.17g", *x);
            return std::string(buf);
        };
        for (const ScanRow& r : rows) {
            auto re = [&](const std::optional<cd>& z) {
                return opt(z ? std::optional<double>(z->real()) : std::nullopt);
            };
            auto im = [&](const std::optional<cd>& z) {
                return opt(z ? std::optional<double>(z->imag()) : std::nullopt);
            };
            std::fprintf(out, "%.17g,%.17g,%s,%s,%s,%s,%s,%s,%s,%s\n", r.s.real(),
                         r.s.imag(), re(r.m_est).c_str(), im(r.m_est).c_str(),
                         re(r.m_closed).c_str(), im(r.m_closed).c_str(),
                         opt(r.abs_err).c_str(), opt(r.denom_abs).c_str(),
                         opt(r.max_residual).c_str(), r.note.c_str());
        }
    }
    if (out != stdout) std::fclose(out);
    if (hard_failure) cli.exit_code = 1;
}

rd::Composition parse_composition(const std::string& text, int n) {
    std::vector<int> parts;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) parts.push_back(std::stoi(item));
    rd::Composition comp(std::move(parts));
    if (comp.n() != n)
        throw eisen::ConfigError("weyl: composition " + text + " does not sum to n=" +
                                 std::to_string(n));
    return comp;
}

void run_weyl(Cli& cli, int n, const std::string& ps, const std::string& qs,
              const std::string& query) {
    rd::Composition P = parse_composition(ps, n);
    rd::Composition Q = parse_composition(qs, n);
    std::vector<rd::WeylElem> elems;
    if (query == "cosets") elems = rd::double_coset_reps(P, Q);
    else if (query == "omega") elems = rd::omega_full(P, Q);
    else if (query == "omega-semi") elems = rd::omega_semi(P, Q);
    else
        throw eisen::ConfigError("weyl: unknown query '" + query +
                                 "' (cosets, omega, omega-semi)");
    if (cli.emit_json) {
        json jelems = json::array();
        for (const rd::WeylElem& w : elems)
            jelems.push_back(json{{"map", w.map}, {"length", w.length()}});
        json j{{"schema", "eisencont/weyl/1"},
               {"n", n},
               {"p", P.parts},
               {"q", Q.parts},
               {"query", query},
               {"count", elems.size()},
               {"elements", jelems}};
        std::printf("%s\n", j.dump(2).c_str());
    } else {
        std::printf("# weyl n=%d P=%s Q=%s query=%s\n", n, ps.c_str(), qs.c_str(),
                    query.c_str());
        std::printf("count = %zu\n", elems.size());
        for (const rd::WeylElem& w : elems) {
            std::string line;
            for (int v : w.map) line += std::to_string(v) + " ";
            std::printf("[ %s] length %d\n", line.c_str(), w.length());
        }
    }
}

/*
 * engine-demo: three packaged toy families showing the continuation engine
 * itself, cut loose from the Eisenstein machinery.  rank1 and twobytwo run
 * the numeric mode (the second has honest poles at +-1); rational3 runs the
 * exact mode over Q(s) and prints the factored denominator.
 */
void run_engine_demo(Cli& cli, const std::string& which) {
    using Eigen::MatrixXcd;
    using Eigen::VectorXcd;
    json j{{"schema", "eisencont/engine-demo/1"}, {"case", which}};

    if (which != "rank1" && which != "twobytwo" && which != "rational3")
        throw eisen::ConfigError("engine-demo: unknown case '" + which +
                                 "' (rank1, twobytwo, rational3)");
    if (which == "rank1" || which == "twobytwo") {
        int dim = which == "rank1" ? 1 : 2;
        auto mat = [=](cd s) {
            MatrixXcd m(dim, dim);
            if (dim == 1) m(0, 0) = 1.0;
            else m << s, 1.0, 1.0, s;
            return m;
        };
        // rank1 gets rhs s so the solution is v(s) = s; twobytwo gets (1, 0)
        auto rhs = [=](cd s) {
            VectorXcd b(dim);
            if (dim == 1) b << s;
            else b << cd(1.0, 0.0), cd(0.0, 0.0);
            return b;
        };
        mc::CallableFamily fam(dim, dim, mat, rhs);
        mc::FiniteTypeWitness wit = mc::FiniteTypeWitness::trivial(dim);
        mc::MeromorphicSolution sol = mc::continue_unique_solution(
            fam, wit, {cd(2.0, 0.0), cd(3.0, 0.0)}, {cd(2.0, 0.0)});

        // report solution values on a small real grid and flag denominator dips
        json jvals = json::array();
        std::vector<std::string> pole_list;
        if (!cli.emit_json) std::printf("# engine-demo case %s\n", which.c_str());
        for (double sr = -2.0; sr <= 2.01; sr += 0.5) {
            cd s(sr, 0.0);
            cd d = sol.denominator(s);
            bool pole = std::abs(d) < 1e-8 * sol.denominator_scale();
            if (pole) {
                char buf[32];
                std::snprintf(buf, sizeof buf, "%g", sr);
                pole_list.push_back(buf);
            }
            json row{{"s", cd_json(s)}, {"denominator", cd_json(d)}};
            if (!pole) {
                VectorXcd v = sol.value(s);
                json jv = json::array();
                for (int i = 0; i < v.size(); ++i) jv.push_back(cd_json(v(i)));
                row["v"] = jv;
                if (!cli.emit_json) {
                    std::printf("s = %+5.2f  v = (", sr);
                    for (int i = 0; i < v.size(); ++i)
                        std::printf("%s%.12g%+.12gi", i ? ", " : "", v(i).real(),
                                    v(i).imag());
                    std::printf(")  |d| = %.3e\n", std::abs(d));
                }
            } else if (!cli.emit_json) {
                std::printf("s = %+5.2f  pole (|d| = %.3e)\n", sr, std::abs(d));
            }
            jvals.push_back(std::move(row));
        }
        if (!cli.emit_json) {
            if (pole_list.empty()) std::printf("no poles on the scan grid\n");
            else {
                std::string all;
                for (const std::string& p : pole_list)
                    all += (all.empty() ? "" : ", ") + p;
                std::printf("denominator vanishes at s = %s\n", all.c_str());
            }
        }
        j["grid"] = std::move(jvals);
        j["poles"] = pole_list;
    } else {
        using mc::RatPoly;
        using eisen::ratpoly::Rat;
        RatPoly one = RatPoly::constant(1), zero = RatPoly();
        RatPoly sm1{Rat(-1), Rat(1)}, sp2{Rat(2), Rat(1)};
        // triangular on purpose: denominator (s-1)^2 (s+2), so the
        // square-free split reports a genuine multiplicity
        mc::RationalFamily fam;
        fam.rows = {{sm1, one, zero}, {zero, sm1, one}, {zero, zero, sp2}};
        fam.rhs = {zero, zero, one};
        mc::RationalSolution sol = mc::solve_rational_family(fam);
        json jsol = json::array();
        if (!cli.emit_json) std::printf("# engine-demo case rational3\n");
        for (size_t i = 0; i < sol.v.size(); ++i) {
            jsol.push_back(json{{"num", sol.v[i].num.str()},
                                {"den", sol.v[i].den.str()}});
            if (!cli.emit_json)
                std::printf("v[%zu] = (%s) / (%s)\n", i, sol.v[i].num.str().c_str(),
                            sol.v[i].den.str().c_str());
        }
        json jfac = json::array();
        std::string fac_text;
        for (const auto& [f, mult] : sol.pole_factors) {
            jfac.push_back(json{{"factor", f.str()}, {"multiplicity", mult}});
            fac_text += (fac_text.empty() ? "" : " * ") + ("(" + f.str() + ")");
            if (mult > 1) fac_text += "^" + std::to_string(mult);
        }
        if (!cli.emit_json) {
            std::printf("denominator = %s\n", sol.denominator.str().c_str());
            std::printf("factored    = %s\n", fac_text.c_str());
        }
        j["solution"] = std::move(jsol);
        j["denominator"] = sol.denominator.str();
        j["pole_factors"] = std::move(jfac);
    }
    if (cli.emit_json) std::printf("%s\n", j.dump(2).c_str());
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"meromorphic continuation of Eisenstein series and friends"};
    app.require_subcommand(1);
    app.fallthrough(); // --json / --config may follow the subcommand name

    Cli cli;
    app.add_flag("--json", cli.emit_json, "emit a machine-readable JSON document");
    auto* copt = app.add_option("--config", cli.config_path,
                                "flat key = value configuration file "
                                "(default: $EISEN_CONFIG)");

    // staging for flag overrides; applied over the config file after parsing
    struct {
        int nx = 0, ny = 0;
        double residual_tol = 0.0;
        unsigned long seed = 0;
        std::string zs, ss = "2", points, ps, qs, query = "cosets", demo = "rank1";
        std::string out_path;
        int M = 0, n = 0;
        double tol = 1e-8;
        double re_min = 0.6, re_max = 2.5, im_min = 0.0, im_max = 0.0;
        int re_n = 0, im_n = 1;
        bool strict = false;
    } st;

    CLI::App* eval = app.add_subcommand("eval", "Eisenstein series value by direct "
                                                "summation, with tail bound");
    eval->add_option("--z", st.zs, "point x,y in the upper half plane")->required();
    eval->add_option("--s", st.ss, "parameter re[,im], Re s > 1");
    eval->add_option("--M", st.M, "truncation radius (0 = grow until --tol)");
    eval->add_option("--tol", st.tol, "tail tolerance for automatic truncation");

    CLI::App* mscan = app.add_subcommand(
        "mscan", "continue E across parameter values, CSV of m vs closed form");
    mscan->add_option("--points", st.points, "explicit list re,im;re,im;...");
    mscan->add_option("--re-min", st.re_min, "rectangle: smallest Re s");
    mscan->add_option("--re-max", st.re_max, "rectangle: largest Re s");
    mscan->add_option("--re-n", st.re_n, "rectangle: points along Re");
    mscan->add_option("--im-min", st.im_min, "rectangle: smallest Im s");
    mscan->add_option("--im-max", st.im_max, "rectangle: largest Im s");
    mscan->add_option("--im-n", st.im_n, "rectangle: points along Im");
    mscan->add_option("--out", st.out_path, "write to a file instead of stdout");
    mscan->add_flag("--strict", st.strict, "abort on the first failed row");
    auto* onx = mscan->add_option("--nx", st.nx, "override grid.nx");
    auto* ony = mscan->add_option("--ny", st.ny, "override grid.ny");
    auto* otol = mscan->add_option("--residual-tol", st.residual_tol,
                                   "override continuation.residual_tol");
    auto* oseed = mscan->add_option("--seed", st.seed, "override continuation.seed");

    CLI::App* weyl = app.add_subcommand(
        "weyl", "type-A double cosets and intertwining index sets");
    weyl->add_option("--n", st.n, "rank: permutations of n letters")->required();
    weyl->add_option("--p", st.ps, "composition of n, e.g. 2,1")->required();
    weyl->add_option("--q", st.qs, "composition of n")->required();
    weyl->add_option("--query", st.query, "cosets | omega | omega-semi");

    CLI::App* demo = app.add_subcommand(
        "engine-demo", "toy continuation families (numeric and exact modes)");
    demo->add_option("--case", st.demo, "rank1 | twobytwo | rational3");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        std::string cfg_path = cli.config_path;
        if (cfg_path.empty() && !copt->count()) {
            const char* env = std::getenv("EISEN_CONFIG");
            if (env && *env) cfg_path = env;
        }
        if (!cfg_path.empty()) load_config_file(cli.cfg, cfg_path);
        if (onx->count()) cli.cfg.nx = st.nx;
        if (ony->count()) cli.cfg.ny = st.ny;
        if (otol->count()) cli.cfg.residual_tol = st.residual_tol;
        if (oseed->count()) cli.cfg.seed = st.seed;

        if (eval->parsed()) run_eval(cli, st.zs, st.ss, st.M, st.tol);
        else if (mscan->parsed())
            run_mscan(cli, st.points, st.re_min, st.re_max, st.re_n, st.im_min,
                      st.im_max, st.im_n, st.strict, st.out_path);
        else if (weyl->parsed()) run_weyl(cli, st.n, st.ps, st.qs, st.query);
        else if (demo->parsed()) run_engine_demo(cli, st.demo);
    } catch (const CLI::ValidationError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const eisen::ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const eisen::DomainError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const eisen::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: malformed numeric argument (%s)\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return cli.exit_code;
}
