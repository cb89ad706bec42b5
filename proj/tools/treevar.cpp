// treevar: generate embedded trees, compute varifold node similarities,
// reconstruct topologies, and run the convergence / velocity experiments.

#include <treevar/io.hpp>
#include <treevar/velocity.hpp>

#include <CLI11.hpp>

#include <cstdio>
#include <string>
#include <vector>

namespace {

using namespace treevar;

// usage errors exit with 2, data/runtime errors with 1
struct usage_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::vector<double> parse_ladder(const std::string& text) {
    std::vector<double> out;
    std::string cur;
    for (char ch : text + ",") {
        if (ch == ',') {
            if (!cur.empty()) {
                try {
                    out.push_back(std::stod(cur));
                } catch (const std::exception&) {
                    throw usage_error("--sigmas: cannot parse '" + cur + "'");
                }
                cur.clear();
            }
        } else {
            cur += ch;
        }
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (out[i] <= 0) throw usage_error("--sigmas: entries must be positive");
        if (i > 0 && out[i] >= out[i - 1]) throw usage_error("--sigmas: ladder must be strictly decreasing");
    }
    if (out.empty()) throw usage_error("--sigmas: empty ladder");
    return out;
}

void print_validators(const EmbeddedTree<double>& emb) {
    const auto a1 = validate_A1(emb);
    const auto a2 = validate_A2(emb);
    const auto a3 = validate_A3(emb);
    std::printf("A1 (chord monotonicity): %s (%ld violations, worst margin %.3g)\n",
                a1.pass() ? "pass" : "FAIL", a1.violations, a1.worst_margin);
    std::printf("A2 (tangent-gap monotonicity): %s (%ld violations, worst margin %.3g)\n",
                a2.pass() ? "pass" : "FAIL", a2.violations, a2.worst_margin);
    std::printf("A3 (branch deviation, a=1): %s (%ld violations, worst margin %.3g)\n",
                a3.pass() ? "pass" : "FAIL", a3.violations, a3.worst_margin);
}

int cmd_generate(int nodes, int dim, int max_children, double theta_min_deg, double len_min,
                 double len_max, double step, std::uint64_t seed, const std::string& output) {
    EmbedParams<double> params;
    params.edge_len_min = len_min;
    params.edge_len_max = len_max;
    params.theta_min = theta_min_deg * EIGEN_PI / 180.0;
    params.sampling_step = step;
    const auto tree = random_tree(nodes, max_children, seed);
    const auto emb = embed(tree, dim, params, Rng::derive(seed, 1));
    io::write_file(output, io::tree_to_json(emb));
    std::printf("wrote %s (%d nodes, dim %d)\n", output.c_str(), nodes, dim);
    print_validators(emb);
    return 0;
}

int cmd_distances(const std::string& input, double sigma_x, double sigma_t, double step, int threads,
                  const std::string& output) {
    auto emb = io::tree_from_json(io::read_file(input));
    if (step > 0) emb = resample_embedding(emb, step);
    std::printf("sigma_x=%g sigma_t=%g step=%g threads=%d\n", sigma_x, sigma_t, step, threads);
    const auto m = delta_matrix(emb, make_kernel(sigma_x, sigma_t), threads);
    io::write_file(output, io::similarity_to_csv(m));
    std::printf("wrote %s (%ld x %ld)\n", output.c_str(), static_cast<long>(m.size()), static_cast<long>(m.size()));
    return 0;
}

void print_diagnostics(const SimilarityMatrix<double>& m, double sup) {
    if (m.size() >= 3)
        std::printf("triangle_defect: %.6g\n", triangle_defect(m, sup));
    else
        std::printf("triangle_defect: vacuous (fewer than 3 nodes)\n");
    if (m.size() >= 4)
        std::printf("four_point_defect: %.6g\n", four_point_defect(m, sup));
    else
        std::printf("four_point_defect: vacuous (fewer than 4 nodes)\n");
}

int cmd_infer(const std::string& input, double sigma_x, double sigma_t, double step, int threads,
              const std::string& truth_path, const std::string& output) {
    SimilarityMatrix<double> m{Matrixd(0, 0), make_kernel(1.0, 1.0), {}};
    const bool from_tree = input.size() > 5 && input.substr(input.size() - 5) == ".json";
    std::optional<EmbeddedTree<double>> truth;
    if (from_tree) {
        auto emb = io::tree_from_json(io::read_file(input));
        if (step > 0) emb = resample_embedding(emb, step);
        m = delta_matrix(emb, make_kernel(sigma_x, sigma_t), threads);
        truth = std::move(emb);
    } else {
        m = io::similarity_from_csv(io::read_file(input), make_kernel(sigma_x, sigma_t));
    }
    if (!truth_path.empty()) truth = io::tree_from_json(io::read_file(truth_path));

    const int root = truth ? truth->tree.root : m.node_ids.front();
    const auto inferred = reconstruct(m, root);
    io::write_file(output, io::inferred_to_json(inferred));
    std::printf("wrote %s (%zu nodes)\n", output.c_str(), inferred.node_ids.size());

    if (m.size() >= 2) {
        const double sup = truth ? edge_delta_sup(truth->tree, m) : mst_edge_sup(m);
        print_diagnostics(m, sup);
    }
    if (truth) {
        const bool iso = is_isomorphic(inferred, truth->tree, IsomorphismMode::Strict);
        std::printf("isomorphic: %s\n", iso ? "true" : "false");
    }
    return 0;
}

int cmd_convergence(const std::string& input, const std::string& sigmas, double sigma0, int rungs,
                    double factor, double ratio, int threads, const std::string& output) {
    std::vector<double> ladder;
    if (!sigmas.empty()) {
        ladder = parse_ladder(sigmas);
    } else {
        if (sigma0 <= 0 || rungs < 1 || factor <= 1) throw usage_error("invalid geometric ladder parameters");
        double s = sigma0;
        for (int i = 0; i < rungs; ++i, s /= factor) ladder.push_back(s);
    }
    const auto emb = io::tree_from_json(io::read_file(input));
    const auto rows = convergence_sweep(emb, ladder, ratio, threads);
    io::write_file(output, io::sweep_to_csv(rows));
    std::printf("wrote %s (%zu rows)\n", output.c_str(), rows.size());
    return 0;
}

int cmd_velocity_demo(const std::string& input, double sigma_x, double sigma_t, int per_edge,
                      double noise_pos, double noise_vel, double speed, double bandwidth, double step,
                      int max_steps, double capture, const std::string& trace, std::uint64_t seed,
                      int threads, const std::string& prefix) {
    const auto emb = io::tree_from_json(io::read_file(input));
    PipelineConfig<double> cfg;
    cfg.per_edge = per_edge;
    cfg.noise_pos = noise_pos;
    cfg.noise_vel = noise_vel;
    cfg.speed = speed;
    cfg.bandwidth = bandwidth;
    cfg.step = step;
    cfg.max_steps = max_steps;
    cfg.capture_radius = capture;
    cfg.trace_nodes_only = trace == "nodes";
    cfg.seed = seed;

    const auto res = velocity_pipeline(emb, cfg, make_kernel(sigma_x, sigma_t), threads);
    io::write_file(prefix + "_cells.json", io::cells_to_json(res.cells, emb.dim()));
    io::write_file(prefix + "_matrix.csv", io::similarity_to_csv(res.matrix));
    io::write_file(prefix + "_tree.json", io::inferred_to_json(res.tree));

    int captured = 0;
    for (const auto& s : res.statuses) {
        std::printf("trace %d: %s after %d steps\n", s.id, to_string(s.cause), s.steps);
        if (s.cause == Termination::Captured) ++captured;
    }
    std::printf("captured %d / %zu traces\n", captured, res.statuses.size());
    if (cfg.trace_nodes_only) {
        if (res.tree.node_ids.size() == static_cast<std::size_t>(emb.node_count())) {
            const bool iso = is_isomorphic(res.tree, emb.tree, IsomorphismMode::Strict);
            std::printf("isomorphic: %s\n", iso ? "true" : "false");
        } else {
            std::printf("isomorphic: not evaluated (%zu traces failed)\n", res.failed_ids.size());
        }
    }
    std::printf("wrote %s_cells.json, %s_matrix.csv, %s_tree.json\n", prefix.c_str(), prefix.c_str(),
                prefix.c_str());
    const double fail_rate =
        1.0 - static_cast<double>(captured) / static_cast<double>(res.statuses.size());
    if (fail_rate > 0.10) {
        std::fprintf(stderr, "error: %.0f%% of traces failed to reach the root\n", 100.0 * fail_rate);
        return 1;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"oriented-varifold curve distances and tree reconstruction"};
    app.require_subcommand(1);
    argv = app.ensure_utf8(argv);

    int threads = 1;
    std::uint64_t seed = 0;
    double sigma_x = 0.05, sigma_t = 0.05, step = 0.0;
    app.add_option("--threads", threads, "worker threads (1 = sequential reference mode)")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();

    auto* gen = app.add_subcommand("generate", "generate a random embedded tree (JSON)");
    int nodes = 10, dim = 3, max_children = 3;
    double theta_min_deg = 30.0, len_min = 0.8, len_max = 1.3, gen_step = 0.05;
    std::string gen_out;
    gen->add_option("--nodes", nodes, "node count")->check(CLI::PositiveNumber)->capture_default_str();
    gen->add_option("--dim", dim, "ambient dimension")->check(CLI::Range(2, 64))->capture_default_str();
    gen->add_option("--max-children", max_children, "branching bound")->check(CLI::PositiveNumber)->capture_default_str();
    gen->add_option("--theta-min-deg", theta_min_deg, "minimum branch/turn angle")->check(CLI::PositiveNumber)->capture_default_str();
    gen->add_option("--edge-len-min", len_min)->check(CLI::PositiveNumber)->capture_default_str();
    gen->add_option("--edge-len-max", len_max)->check(CLI::PositiveNumber)->capture_default_str();
    gen->add_option("--step", gen_step, "edge sampling step")->check(CLI::PositiveNumber)->capture_default_str();
    gen->add_option("--seed", seed, "RNG seed")->capture_default_str();
    gen->add_option("-o,--output", gen_out, "output tree JSON")->required();

    auto* dist = app.add_subcommand("distances", "compute the Delta similarity matrix (CSV)");
    std::string dist_in, dist_out;
    dist->add_option("input", dist_in, "tree JSON")->required();
    dist->add_option("--sigma-x", sigma_x, "position bandwidth")->check(CLI::PositiveNumber)->capture_default_str();
    dist->add_option("--sigma-t", sigma_t, "tangent bandwidth")->check(CLI::PositiveNumber)->capture_default_str();
    dist->add_option("--step", step, "resample step (0 = keep stored sampling)")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    dist->add_option("-o,--output", dist_out, "output matrix CSV")->required();

    auto* infer = app.add_subcommand("infer", "reconstruct the topology from a matrix CSV or tree JSON");
    std::string infer_in, infer_truth, infer_out;
    infer->add_option("input", infer_in, "matrix CSV or tree JSON")->required();
    infer->add_option("--sigma-x", sigma_x)->check(CLI::PositiveNumber)->capture_default_str();
    infer->add_option("--sigma-t", sigma_t)->check(CLI::PositiveNumber)->capture_default_str();
    infer->add_option("--step", step, "resample step for tree input (0 = keep)")->capture_default_str();
    infer->add_option("--truth", infer_truth, "ground-truth tree JSON for the isomorphism verdict");
    infer->add_option("-o,--output", infer_out, "output inferred-tree JSON")->required();

    auto* conv = app.add_subcommand("convergence", "run the sigma-ladder convergence sweep (CSV)");
    std::string conv_in, conv_sigmas, conv_out;
    double sigma0 = 0.4, factor = 2.0, ratio = 1.0;
    int rungs = 5;
    conv->add_option("input", conv_in, "tree JSON")->required();
    conv->add_option("--sigmas", conv_sigmas, "explicit ladder, e.g. 0.4,0.2,0.1");
    conv->add_option("--sigma0", sigma0, "geometric ladder start")->capture_default_str();
    conv->add_option("--rungs", rungs, "geometric ladder length")->capture_default_str();
    conv->add_option("--factor", factor, "geometric ladder divisor")->capture_default_str();
    conv->add_option("--ratio", ratio, "sigma_t / sigma_x coupling")->check(CLI::PositiveNumber)->capture_default_str();
    conv->add_option("-o,--output", conv_out, "output sweep CSV")->required();

    auto* velo = app.add_subcommand("velocity-demo", "synthetic RNA-velocity pipeline");
    std::string velo_in, velo_trace = "nodes", velo_prefix;
    PipelineConfig<double> defaults;
    int per_edge = defaults.per_edge, max_steps = defaults.max_steps;
    double noise_pos = 0.0, noise_vel = 0.0, speed = defaults.speed, bandwidth = defaults.bandwidth,
           velo_step = defaults.step, capture = 0.0;
    velo->add_option("input", velo_in, "tree JSON")->required();
    velo->add_option("--sigma-x", sigma_x)->check(CLI::PositiveNumber)->capture_default_str();
    velo->add_option("--sigma-t", sigma_t)->check(CLI::PositiveNumber)->capture_default_str();
    velo->add_option("--per-edge", per_edge, "field cells per edge")->check(CLI::PositiveNumber)->capture_default_str();
    velo->add_option("--noise-pos", noise_pos, "cell position noise")->capture_default_str();
    velo->add_option("--noise-vel", noise_vel, "cell velocity noise")->capture_default_str();
    velo->add_option("--speed", speed, "cell speed scale")->check(CLI::PositiveNumber)->capture_default_str();
    velo->add_option("--bandwidth", bandwidth, "field interpolation bandwidth")->check(CLI::PositiveNumber)->capture_default_str();
    velo->add_option("--step", velo_step, "integration arc step")->check(CLI::PositiveNumber)->capture_default_str();
    velo->add_option("--max-steps", max_steps)->check(CLI::PositiveNumber)->capture_default_str();
    velo->add_option("--capture-radius", capture, "root capture radius (0 = auto from step and bandwidth)")->capture_default_str();
    velo->add_option("--trace", velo_trace, "trace starts: nodes | cells")->check(CLI::IsMember({"nodes", "cells"}))->capture_default_str();
    velo->add_option("--seed", seed, "RNG seed")->capture_default_str();
    velo->add_option("-o,--output", velo_prefix, "output file prefix")->required();

    gen->add_option("--threads", threads)->check(CLI::PositiveNumber);
    dist->add_option("--threads", threads)->check(CLI::PositiveNumber);
    infer->add_option("--threads", threads)->check(CLI::PositiveNumber);
    conv->add_option("--threads", threads)->check(CLI::PositiveNumber);
    velo->add_option("--threads", threads)->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (gen->parsed())
            return cmd_generate(nodes, dim, max_children, theta_min_deg, len_min, len_max, gen_step, seed,
                                gen_out);
        if (dist->parsed()) return cmd_distances(dist_in, sigma_x, sigma_t, step, threads, dist_out);
        if (infer->parsed())
            return cmd_infer(infer_in, sigma_x, sigma_t, step, threads, infer_truth, infer_out);
        if (conv->parsed())
            return cmd_convergence(conv_in, conv_sigmas, sigma0, rungs, factor, ratio, threads, conv_out);
        if (velo->parsed())
            return cmd_velocity_demo(velo_in, sigma_x, sigma_t, per_edge, noise_pos, noise_vel, speed,
                                     bandwidth, velo_step, max_steps, capture, velo_trace, seed, threads,
                                     velo_prefix);
    } catch (const usage_error& e) {
        std::fprintf(stderr, "usage error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
