#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <fraclap/fraclap.hpp>

namespace fs = std::filesystem;
using namespace fraclap;
using io::json;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_validation = 2;
constexpr int exit_numerical = 3;
constexpr int exit_io = 4;

std::vector<double> parse_list(const std::string& s) {
    std::vector<double> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        const std::size_t pos = s.find(',', start);
        const std::string cell = s.substr(start, pos == std::string::npos ? std::string::npos : pos - start);
        if (cell.empty()) throw ParameterError("empty entry in list \"" + s + "\"");
        out.push_back(io::parse_double(cell));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return out;
}

Point parse_point(const std::string& s, int dim) {
    const std::vector<double> v = parse_list(s);
    if (static_cast<int>(v.size()) != dim) throw ParameterError("point \"" + s + "\" needs " + std::to_string(dim) + " coordinates");
    return dim == 1 ? Point{v[0], 0.0} : Point{v[0], v[1]};
}

struct Options {
    std::string config_file;
    std::string out;
    long seed = 0;

    std::string alpha, dim, h, p, domain, schedule, ymax, extent, at, tol, field, xi, probes, frame_h, window;
    std::string continue_from;
    bool calibrate = true;
};

/// The effective experiment config: defaults, then the config document, then explicit flags.
io::ExperimentConfig effective_config(const Options& o, const std::optional<json>& snapshot) {
    io::ExperimentConfig c;
    json doc = json::object();
    if (snapshot) {
        doc = *snapshot;
    } else if (!o.config_file.empty()) {
        doc = json::parse(io::read_file(o.config_file), nullptr, false);
        if (doc.is_discarded()) c = io::load_config(o.config_file);  // reports the syntax error position
    }
    if (!o.alpha.empty()) doc["alpha"] = io::parse_double(o.alpha);
    if (!o.dim.empty()) doc["n"] = static_cast<int>(io::parse_double(o.dim));
    if (!o.h.empty()) doc["h"] = io::parse_double(o.h);
    if (!o.p.empty()) doc["solve"]["p"] = io::parse_double(o.p);
    if (!o.schedule.empty()) doc["solve"]["continuation"] = parse_list(o.schedule);
    if (!o.domain.empty()) {
        const std::vector<double> ab = parse_list(o.domain);
        if (ab.size() != 2) throw ParameterError("--domain expects a,b");
        doc["domain"] = json{{"type", "interval"}, {"a", ab[0]}, {"b", ab[1]}};
    }
    if (!o.ymax.empty()) doc["extension"]["y_max"] = io::parse_double(o.ymax);
    if (!o.tol.empty()) doc["quad"]["tol"] = io::parse_double(o.tol);
    if (doc.contains("solve") && doc["solve"].contains("continuation") && !doc["solve"].contains("p") &&
        !doc["solve"]["continuation"].empty())
        doc["solve"]["p"] = doc["solve"]["continuation"].front();
    return io::parse_config(doc.dump());
}

struct RunContext {
    std::vector<std::string> argv;
    io::RunManifest manifest;
    fs::path out;

    void artifact(const fs::path& rel) { manifest.artifacts.push_back(rel.generic_string()); }
    fs::path path(const fs::path& rel) {
        artifact(rel);
        return out / rel;
    }
    void finish() {
        manifest.finished = io::utc_timestamp();
        io::write_manifest(manifest, out / "manifest.json");
    }
};

RunContext begin_run(const std::vector<std::string>& argv, const io::ExperimentConfig& cfg, const fs::path& out) {
    RunContext ctx;
    ctx.argv = argv;
    ctx.out = out;
    ctx.manifest.command_line = argv;
    ctx.manifest.config = io::to_json(cfg);
    ctx.manifest.parameter_hash = io::fnv1a_hex(ctx.manifest.config.dump());
    ctx.manifest.started = io::utc_timestamp();
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) throw IoError("cannot create output directory " + out.string());
    return ctx;
}

json record_json(const SolutionRecord& r) {
    const Grid& g = r.u.grid();
    return json{{"p", r.p},
                {"m", r.m},
                {"x_star", g.dim() == 1 ? json(r.x_star.x) : json{r.x_star.x, r.x_star.y}},
                {"d", r.d},
                {"residual_norm", r.residual_norm},
                {"newton_iterations", r.history.size() - 1},
                {"grid", {{"dim", g.dim()}, {"h", g.h()}, {"extent", g.extent()}, {"nodes", g.size()}}}};
}

io::Table grid_table(const GridFunction& f, const char* name) {
    io::Table t;
    const Grid& g = f.grid();
    t.header = g.dim() == 1 ? std::vector<std::string>{"x", name} : std::vector<std::string>{"x", "y", name};
    for (std::size_t k = 0; k < g.size(); ++k) {
        const Point x = g.coordinate(k);
        if (g.dim() == 1)
            t.rows.push_back({x.x, f[k]});
        else
            t.rows.push_back({x.x, x.y, f[k]});
    }
    return t;
}

int cmd_operator_eval(const Options& o, const std::optional<json>& snap) {
    const io::ExperimentConfig cfg = effective_config(o, snap);
    const FracParams params = cfg.params();
    const Point x = parse_point(o.at.empty() ? (cfg.n == 1 ? "0" : "0,0") : o.at, cfg.n);
    FieldFn f;
    const std::string field = o.field.empty() ? "cos" : o.field;
    if (field == "const") {
        f = fields::constant(1.0);
    } else if (field == "cos") {
        const Point xi = parse_point(o.xi.empty() ? (cfg.n == 1 ? "1" : "1,0") : o.xi, cfg.n);
        f = fields::cosine(xi);
    } else if (field == "psi1") {
        f = psi1_field({0.0, 0.0}, params);
    } else {
        throw ParameterError("--field must be const, cos or psi1");
    }
    const PvValue v = eval_point_pv(f, x, params, cfg.quad);
    std::printf("value %s\nerror_estimate %s\ntail_error %s\nsubdivisions %zu\n", io::format_double(v.value).c_str(),
                io::format_double(v.error).c_str(), io::format_double(v.tail_error).c_str(), v.subdivisions);
    return exit_ok;
}

int cmd_operator_assemble(const Options& o, const std::optional<json>& snap, const std::vector<std::string>& argv) {
    const io::ExperimentConfig cfg = effective_config(o, snap);
    const double extent = o.extent.empty() ? 1.0 : io::parse_double(o.extent);
    const Grid g(cfg.n, cfg.h, extent);
    const DiscreteOperator a = assemble_discrete(g, cfg.params()).restrict_to(g.interior_nodes());
    const Eigen::MatrixXd& m = a.matrix();
    io::Table t;
    for (Eigen::Index j = 0; j < m.cols(); ++j) t.header.push_back("c" + std::to_string(j));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        std::vector<double> row(static_cast<std::size_t>(m.cols()));
        for (Eigen::Index j = 0; j < m.cols(); ++j) row[static_cast<std::size_t>(j)] = m(i, j);
        t.rows.push_back(std::move(row));
    }
    const fs::path out = o.out.empty() ? fs::path("matrix.csv") : fs::path(o.out);
    io::emit_csv(t, out);
    (void)argv;
    std::printf("wrote %s (%ld x %ld)\n", out.string().c_str(), static_cast<long>(m.rows()), static_cast<long>(m.cols()));
    return exit_ok;
}

int cmd_barrier_verify(const Options& o, const std::optional<json>& snap) {
    const io::ExperimentConfig cfg = effective_config(o, snap);
    const FracParams params = cfg.params();
    std::vector<Point> probes;
    if (!o.probes.empty()) {
        const io::Table t = io::read_csv(o.probes);
        const auto col = [&](const char* name) -> long {
            for (std::size_t i = 0; i < t.header.size(); ++i)
                if (t.header[i] == name) return static_cast<long>(i);
            return -1;
        };
        const long cx = col("x"), cy = col("y");
        if (cx < 0) throw InputError("probe file needs an x column");
        for (const auto& row : t.rows)
            probes.push_back({row[static_cast<std::size_t>(cx)], cy >= 0 ? row[static_cast<std::size_t>(cy)] : 0.0});
    } else {
        for (double r : {1.2, 1.5, 2.0, 2.5, 3.0}) probes.push_back({r, 0.0});
    }
    const Psi2Report rep = verify_psi2_identity(params, probes, cfg.quad);
    io::Table t;
    t.header = cfg.n == 1 ? std::vector<std::string>{"probe", "lhs", "rhs", "rel_err"}
                          : std::vector<std::string>{"probe_x", "probe_y", "lhs", "rhs", "rel_err"};
    for (const auto& p : rep.probes) {
        if (cfg.n == 1)
            t.rows.push_back({p.x.x, p.lhs, p.rhs, p.rel_err});
        else
            t.rows.push_back({p.x.x, p.x.y, p.lhs, p.rhs, p.rel_err});
    }
    const std::string csv = io::to_csv(t);
    if (o.out.empty())
        std::fwrite(csv.data(), 1, csv.size(), stdout);
    else
        io::write_atomic(o.out, csv);
    std::fprintf(stderr, "worst relative error %s\n", io::format_double(rep.worst).c_str());
    return exit_ok;
}

int cmd_solve(const Options& o, const std::optional<json>& snap, const std::vector<std::string>& argv) {
    const io::ExperimentConfig cfg = effective_config(o, snap);
    const FracParams params = cfg.params();
    RunContext ctx = begin_run(argv, cfg, o.out.empty() ? "run" : o.out);
    const Grid g = domain_grid(cfg.domain, cfg.h);
    const DiscreteOperator a = domain_operator(cfg.domain, g, params);
    const double start = o.continue_from.empty() ? std::min(cfg.solve.p, 2.0) : io::parse_double(o.continue_from);
    std::vector<double> schedule{cfg.solve.p};
    if (start < cfg.solve.p) schedule.insert(schedule.begin(), start);
    const ContinuationResult run = continuation_run(cfg.domain, schedule, a, params, cfg.solve);
    if (run.aborted) throw SolveError(run.failure, {});
    const SolutionRecord& rec = run.records.back();

    io::emit_csv(grid_table(rec.u, "u"), ctx.path("solution.csv"));
    io::write_atomic(ctx.path("record.json"), record_json(rec).dump(2) + "\n");
    io::Table conv;
    conv.header = {"iteration", "residual"};
    for (std::size_t i = 0; i < rec.history.size(); ++i) conv.rows.push_back({static_cast<double>(i), rec.history[i]});
    io::emit_csv(conv, ctx.path("convergence.csv"));
    if (cfg.n == 1) {
        io::Series s{"u against d", {}, {}};
        for (std::size_t k = 0; k < g.size(); ++k) {
            const double d = cfg.domain.distance(g.coordinate(k));
            if (d > 0.0 && rec.u[k] > 0.0 && d <= 0.5 * cfg.domain.diameter()) {
                s.x.push_back(d);
                s.y.push_back(rec.u[k]);
            }
        }
        io::PlotStyle style;
        style.title = "boundary behaviour";
        style.x_label = "d(x)";
        style.y_label = "u";
        style.log_x = style.log_y = true;
        style.markers = false;
        if (!s.x.empty()) io::emit_svg_plot({s}, ctx.path("boundary.svg"), style);
    }
    ctx.finish();
    std::printf("p %s m %s residual %s\n", io::format_double(rec.p).c_str(), io::format_double(rec.m).c_str(),
                io::format_double(rec.residual_norm).c_str());
    return exit_ok;
}

int cmd_blowup(const Options& o, const std::optional<json>& snap, const std::vector<std::string>& argv) {
    const io::ExperimentConfig cfg = effective_config(o, snap);
    const FracParams params = cfg.params();
    if (cfg.solve.continuation.empty()) throw ParameterError("blowup needs a --schedule");
    RunContext ctx = begin_run(argv, cfg, o.out.empty() ? "run" : o.out);
    const double frame_h = o.frame_h.empty() ? 0.01 : io::parse_double(o.frame_h);
    const double window = o.window.empty() ? 20.0 : io::parse_double(o.window);

    const BlowupSequence seq = run_sequence(cfg.domain, cfg.solve.continuation, domain_grid(cfg.domain, cfg.h), params, cfg.solve);
    io::emit_csv(io::sequence_table(seq), ctx.path("sequence.csv"));

    std::vector<RescaledProfile> profiles;
    io::Table hold;
    hold.header = {"k", "p", "sigma", "seminorm", "ratio"};
    json residuals = json::array();
    for (std::size_t k = 0; k < seq.records.size(); ++k) {
        const SolutionRecord& rec = seq.records[k];
        const Grid aligned = covering_frame(rec, params, rec.u.grid().h() / seq.lambdas[k]);
        const RescaledProfile exact = rescale_profile(rec, cfg.domain, params, aligned, k);
        residuals.push_back({{"k", k}, {"residual", rescaled_residual(exact, params)}, {"budget", rescaled_residual_budget(exact)}});

        profiles.push_back(rescale_profile(rec, cfg.domain, params, covering_frame(rec, params, frame_h), k));
        const RescaledProfile& pr = profiles.back();
        const HolderReport hr = holder_seminorm(pr.v, 0.5 * params.alpha(), rescaled_operator(pr, params), params);
        hold.rows.push_back({static_cast<double>(k), rec.p, hr.sigma, hr.seminorm, hr.ratio});

        io::Table prof;
        prof.header = {"x", "v"};
        const Grid& fg = pr.v.grid();
        for (std::size_t i = 0; i < fg.size(); ++i) {
            const Point x = fg.coordinate(i);
            if (std::abs(x.x) <= window + 1e-12) prof.rows.push_back({x.x, pr.v[i]});
        }
        io::emit_csv(prof, ctx.path(fs::path("profiles") / (std::to_string(k) + ".csv")));
    }
    io::emit_csv(hold, ctx.path("holder.csv"));

    json cls{{"classification", to_string(seq.classification)},
             {"ratios", seq.ratios},
             {"lambdas", seq.lambdas},
             {"aborted", seq.aborted},
             {"failure", seq.failure},
             {"rescaled_residuals", residuals}};
    if (profiles.size() >= 2) {
        const ConvergenceReport cm = convergence_metric(profiles, params);
        cls["value_diffs"] = cm.value_diffs;
        cls["operator_diffs"] = cm.operator_diffs;
    }
    io::write_atomic(ctx.path("classification.json"), cls.dump(2) + "\n");

    if (!seq.records.empty()) {
        io::Series s{"d_k / lambda_k", {}, seq.ratios};
        for (std::size_t k = 0; k < seq.records.size(); ++k) s.x.push_back(seq.records[k].p);
        io::PlotStyle style;
        style.title = "boundary distance over rescaling length";
        style.x_label = "p";
        style.y_label = "ratio";
        style.log_y = true;
        io::emit_svg_plot({s}, ctx.path("ratios.svg"), style);
    }
    ctx.finish();
    std::printf("classification %s", to_string(seq.classification).c_str());
    if (seq.aborted) std::printf(" (aborted: %s)", seq.failure.c_str());
    std::printf("\n");
    return seq.aborted ? exit_numerical : exit_ok;
}

int cmd_extension_compare(const Options& o, const std::optional<json>& snap) {
    io::ExperimentConfig cfg = effective_config(o, snap);
    cfg.extension.calibrate = o.calibrate;
    const FracParams params = cfg.params();
    const Grid g(1, cfg.h, 1.0);
    const GridFunction u = GridFunction::sample(g, fields::smooth_bump(1.0));
    const CrossValidation cv = cross_validate(u, cfg.extension, params);
    io::Table t;
    t.header = {"x", "direct", "trace", "rel_diff"};
    for (std::size_t i = 0; i < cv.x.size(); ++i) t.rows.push_back({cv.x[i], cv.direct[i], cv.trace[i], cv.rel_diff[i]});
    const fs::path out = o.out.empty() ? fs::path("report.csv") : fs::path(o.out);
    io::emit_csv(t, out);
    std::printf("median %s max %s\n", io::format_double(cv.median).c_str(), io::format_double(cv.max).c_str());
    return exit_ok;
}

int dispatch(const std::vector<std::string>& argv, const std::optional<json>& snapshot, const std::string& out_override);

int cmd_replay(const std::string& manifest_path, const std::string& out) {
    const io::RunManifest m = io::read_manifest(manifest_path);
    if (m.command_line.empty()) throw InputError("manifest has an empty command line");
    return dispatch(m.command_line, std::optional<json>(std::in_place, m.config), out);
}

int dispatch(const std::vector<std::string>& argv, const std::optional<json>& snapshot, const std::string& out_override) {
    CLI::App app{"fraclap: fractional Laplacian operators, semilinear solves and blow-up experiments"};
    app.set_help_flag("--help", "print help");
    app.require_subcommand(1);
    app.fallthrough();
    Options o;
    app.add_option("--config", o.config_file, "JSON experiment config");
    app.add_option("--out", o.out, "output directory or file");
    app.add_option("--seed", o.seed, "reserved; the pipeline is deterministic");

    auto common = [&](CLI::App* c) {
        c->add_option("--alpha", o.alpha, "order in (0,2)");
        c->add_option("--h", o.h, "grid spacing");
    };
    CLI::App* op = app.add_subcommand("operator", "pointwise and assembled operator");
    op->require_subcommand(1);
    CLI::App* eval = op->add_subcommand("eval", "principal-value evaluation at one point");
    common(eval);
    eval->add_option("--dim", o.dim, "dimension 1 or 2");
    eval->add_option("--field", o.field, "const, cos or psi1");
    eval->add_option("--at", o.at, "evaluation point, x or x,y");
    eval->add_option("--xi", o.xi, "frequency of the cos field");
    eval->add_option("--tol", o.tol, "absolute tolerance");
    CLI::App* assemble = op->add_subcommand("assemble", "dense matrix on the interior nodes of [-R,R]^n");
    common(assemble);
    assemble->add_option("--dim", o.dim, "dimension 1 or 2");
    assemble->add_option("--extent", o.extent, "half width R");

    CLI::App* barrier = app.add_subcommand("barrier", "barrier checks");
    barrier->require_subcommand(1);
    CLI::App* verify = barrier->add_subcommand("verify", "operator of the Kelvin-transformed profile at probes");
    common(verify);
    verify->add_option("--dim", o.dim, "dimension 1 or 2");
    verify->add_option("--probes", o.probes, "CSV with columns x (and y)");

    CLI::App* solve = app.add_subcommand("solve", "semilinear solve on an interval");
    common(solve);
    solve->add_option("--domain", o.domain, "interval end points a,b");
    solve->add_option("--p", o.p, "exponent");
    solve->add_option("--continue-from", o.continue_from, "start exponent of the continuation path (default min(p,2))");

    CLI::App* blowup = app.add_subcommand("blowup", "continuation sequence, rescaling and classification");
    common(blowup);
    blowup->add_option("--domain", o.domain, "interval end points a,b");
    blowup->add_option("--schedule", o.schedule, "increasing exponents p1,p2,...");
    blowup->add_option("--frame-h", o.frame_h, "spacing of the common rescaled frame");
    blowup->add_option("--window", o.window, "half width of the written profiles");

    CLI::App* ext = app.add_subcommand("extension", "extension-method cross-check");
    ext->require_subcommand(1);
    CLI::App* compare = ext->add_subcommand("compare", "trace operator against the direct discrete operator");
    common(compare);
    compare->add_option("--ymax", o.ymax, "truncation height");
    compare->add_flag("--calibrate,!--raw", o.calibrate, "apply the cos calibration (default on)");

    std::string manifest;
    CLI::App* replay = app.add_subcommand("replay", "re-run a command from its manifest");
    replay->add_option("manifest", manifest, "manifest.json of an earlier run")->required();

    std::vector<std::string> args(argv.rbegin(), argv.rend());
    try {
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_validation;
    }
    if (!out_override.empty()) o.out = out_override;

    if (*replay) return cmd_replay(manifest, o.out);
    if (*eval) return cmd_operator_eval(o, snapshot);
    if (*assemble) return cmd_operator_assemble(o, snapshot, argv);
    if (*verify) return cmd_barrier_verify(o, snapshot);
    if (*solve) return cmd_solve(o, snapshot, argv);
    if (*blowup) return cmd_blowup(o, snapshot, argv);
    if (*compare) return cmd_extension_compare(o, snapshot);
    return exit_validation;
}

}  // namespace

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    try {
        return dispatch(args, std::nullopt, "");
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return exit_io;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return exit_io;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return exit_numerical;
    } catch (const Error& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return exit_validation;
    } catch (const json::exception& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return exit_validation;
    }
}
