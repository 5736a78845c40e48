#include "milbo/config.hpp"
#include "milbo/gradcheck.hpp"
#include "milbo/graph.hpp"
#include "milbo/probe.hpp"
#include "milbo/train.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <atomic>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json load_json_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw milbo::DataFormatError("cannot open " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw milbo::DataFormatError(path.string() + ": " + e.what());
    }
    return j;
}

json resolve_config(const std::string& config_file, const std::vector<std::string>& overrides) {
    json j = config_file.empty() ? json::object() : load_json_file(config_file);
    for (const auto& kv : overrides) milbo::apply_override(j, kv);
    return j;
}

void print_resolved(const char* cmd, const json& j) {
    std::cout << "[" << cmd << "] resolved config: " << j.dump() << "\n";
}

int run_train(const std::string& data_dir, const std::string& config_file,
              const std::vector<std::string>& overrides, const std::string& out_dir,
              const std::string& resume_path) {
    json cfg_json = resolve_config(config_file, overrides);
    milbo::TrainConfig cfg = milbo::train_config_from_json(cfg_json);
    print_resolved("train", milbo::train_config_to_json(cfg));

    milbo::Graph g = milbo::load_graph(data_dir);
    std::cout << "loaded graph: n=" << g.n << " f=" << g.f << " edges=" << g.edges.size() << "\n";

    fs::create_directories(out_dir);
    {
        std::ofstream cfg_out(fs::path(out_dir) / "resolved_config.json");
        cfg_out << milbo::train_config_to_json(cfg).dump(2) << '\n';
    }

    std::optional<milbo::Checkpoint> resume;
    if (!resume_path.empty()) resume = milbo::load_checkpoint(resume_path);

    std::ofstream log(fs::path(out_dir) / "train_log.jsonl");
    milbo::TrainResult result = milbo::train(g, cfg, resume, out_dir, &log);

    milbo::Embeddings z = milbo::embed(g, result.params);
    milbo::save_embeddings_csv(z, fs::path(out_dir) / "embeddings.csv");

    if (!result.log.empty())
        std::cout << "final loss: total=" << result.log.back().loss.total
                  << " (epoch " << result.log.back().epoch << ")\n";
    std::cout << "wrote " << out_dir << "/{checkpoint.bin,train_log.jsonl,embeddings.csv}\n";
    return 0;
}

int run_embed(const std::string& data_dir, const std::string& ckpt_path,
              const std::string& out_file) {
    milbo::Checkpoint ck = milbo::load_checkpoint(ckpt_path);
    print_resolved("embed", json{{"checkpoint", ckpt_path},
                                 {"epoch", ck.epoch},
                                 {"seed", ck.seed},
                                 {"rng", ck.rng_algorithm}});
    milbo::Graph g = milbo::load_graph(data_dir);
    milbo::Embeddings z = milbo::embed(g, ck.params);
    milbo::save_embeddings_csv(z, out_file);
    std::cout << "wrote " << out_file << " (" << z.z.rows() << " x " << z.z.cols() << ")\n";
    return 0;
}

int run_eval(const std::string& emb_file, const std::string& data_dir,
             const std::string& probe_config, const std::vector<std::string>& overrides,
             const std::string& out_file) {
    json cfg_json = resolve_config(probe_config, overrides);
    milbo::ProbeConfig cfg = milbo::probe_config_from_json(cfg_json);
    print_resolved("eval", milbo::probe_config_to_json(cfg));

    milbo::Graph g = milbo::load_graph(data_dir);
    milbo::Matrix z = milbo::load_embeddings_csv(emb_file);
    if (z.rows() != g.n) throw milbo::DataFormatError("embeddings row count != node count");

    milbo::EvalReport report = milbo::linear_probe(z, g.labels, g.splits, cfg);
    json j{{"accuracies", report.accuracies},
           {"mean", report.mean},
           {"std", report.std_dev},
           {"train_size", report.train_size},
           {"test_size", report.test_size},
           {"probe_config", milbo::probe_config_to_json(cfg)}};
    std::cout << "accuracy mean=" << report.mean << " std=" << report.std_dev << "\n";
    if (!out_file.empty()) {
        std::ofstream out(out_file);
        out << j.dump(2) << '\n';
        std::cout << "wrote " << out_file << "\n";
    }
    return 0;
}

int run_gradcheck(const std::string& data_dir, const std::string& config_file,
                  const std::vector<std::string>& overrides, std::uint64_t seed) {
    json cfg_json = resolve_config(config_file, overrides);
    milbo::TrainConfig cfg = milbo::train_config_from_json(cfg_json);
    print_resolved("gradcheck", milbo::train_config_to_json(cfg));

    milbo::Graph g;
    if (!data_dir.empty()) {
        g = milbo::load_graph(data_dir);
    } else {
        milbo::SbmSpec spec;
        spec.blocks = {5, 5};
        spec.p_in = 0.6;
        spec.p_out = 0.1;
        spec.feature_noise = 0.3;
        spec.seed = seed;
        g = milbo::generate_sbm(spec);
        std::cout << "using built-in 10-node SBM fixture\n";
    }

    milbo::GradCheckReport report = milbo::grad_check(g, cfg, seed);
    std::cout << "max relative error: " << report.max_rel_error << " over "
              << report.params_checked << " parameters (tolerance " << report.tolerance << ")\n"
              << (report.passed ? "PASS" : "FAIL") << "\n";
    return report.passed ? 0 : 1;
}

int run_synth(const std::string& spec_file, const std::string& out_dir) {
    json j = load_json_file(spec_file);
    milbo::SbmSpec spec = milbo::sbm_spec_from_json(j);
    print_resolved("synth", j);
    milbo::Graph g = milbo::generate_sbm(spec);
    milbo::save_graph(g, out_dir);
    std::cout << "wrote " << out_dir << ": n=" << g.n << " edges=" << g.edges.size() << "\n";
    return 0;
}

// Grid file: {"base_config": {...}, "probe": {...}, "seeds": [..],
//             "lambda": [..], "p_h": [..], "p_a": [..], "k": [..], "l": [..]}
// Axes default to a single cell at the base config's value.
int run_sweep(const std::string& grid_file, const std::string& data_dir,
              const std::string& out_file, int jobs) {
    json grid = load_json_file(grid_file);
    print_resolved("sweep", grid);
    milbo::Graph g = milbo::load_graph(data_dir);

    json base = grid.value("base_config", json::object());
    milbo::ProbeConfig probe_cfg = milbo::probe_config_from_json(grid.value("probe", json::object()));
    std::vector<std::uint64_t> seeds = grid.value("seeds", std::vector<std::uint64_t>{0});

    auto axis = [&](const char* name) -> std::vector<json> {
        if (!grid.contains(name)) return {json()};
        std::vector<json> out;
        for (const auto& v : grid.at(name)) out.push_back(v);
        return out;
    };
    struct Cell {
        json cfg_json;
        double lambda, p_h, p_a;
        int k, l;
    };
    std::vector<Cell> cells;
    for (const auto& lam : axis("lambda"))
        for (const auto& ph : axis("p_h"))
            for (const auto& pa : axis("p_a"))
                for (const auto& kk : axis("k"))
                    for (const auto& ll : axis("l")) {
                        json cj = base;
                        if (!lam.is_null()) cj["lambda"] = lam;
                        if (!ph.is_null()) cj["p_h"] = ph;
                        if (!pa.is_null()) cj["p_a"] = pa;
                        if (!kk.is_null()) cj["k"] = kk;
                        if (!ll.is_null()) cj["l"] = ll;
                        milbo::TrainConfig c = milbo::train_config_from_json(cj);
                        cells.push_back({cj, c.lambda, c.p_h, c.p_a, c.k, c.l});
                    }

    std::vector<std::pair<double, double>> results(cells.size());
    std::atomic<size_t> next{0};
    auto worker = [&]() {
        for (size_t i = next.fetch_add(1); i < cells.size(); i = next.fetch_add(1)) {
            milbo::TrainConfig cfg = milbo::train_config_from_json(cells[i].cfg_json);
            std::vector<double> accs;
            for (std::uint64_t seed : seeds) {
                milbo::TrainConfig c = cfg;
                c.seed = seed;
                milbo::TrainResult r = milbo::train(g, c);
                milbo::Embeddings z = milbo::embed(g, r.params);
                milbo::ProbeConfig pc = probe_cfg;
                pc.seed = seed;
                accs.push_back(milbo::linear_probe(z.z, g.labels, g.splits, pc).mean);
            }
            double mean = 0.0;
            for (double a : accs) mean += a;
            mean /= static_cast<double>(accs.size());
            double var = 0.0;
            for (double a : accs) var += (a - mean) * (a - mean);
            results[i] = {mean, std::sqrt(var / static_cast<double>(accs.size()))};
        }
    };
    jobs = std::max(1, jobs);
    std::vector<std::thread> pool;
    for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    std::ofstream out(out_file);
    out << "lambda,p_h,p_a,k,l,mean_accuracy,std_accuracy\n";
    for (size_t i = 0; i < cells.size(); ++i)
        out << cells[i].lambda << ',' << cells[i].p_h << ',' << cells[i].p_a << ','
            << cells[i].k << ',' << cells[i].l << ',' << results[i].first << ','
            << results[i].second << '\n';
    std::cout << "wrote " << out_file << " (" << cells.size() << " cells)\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"milbo: contrastive node-embedding training on graphs"};
    app.require_subcommand(1);

    std::string data_dir, config_file, out_dir, resume_path;
    std::vector<std::string> overrides;

    auto* train = app.add_subcommand("train", "Train the encoder on a data directory");
    train->add_option("--data", data_dir, "data directory")->required();
    train->add_option("--config", config_file, "JSON config file");
    train->add_option("--set", overrides, "key=value config overrides");
    train->add_option("--out", out_dir, "output directory")->required();
    train->add_option("--resume", resume_path, "checkpoint to resume from");

    std::string ckpt_path, emb_out = "embeddings.csv";
    auto* embed = app.add_subcommand("embed", "Export full-graph embeddings from a checkpoint");
    embed->add_option("--data", data_dir, "data directory")->required();
    embed->add_option("--checkpoint", ckpt_path, "checkpoint file")->required();
    embed->add_option("--out", emb_out, "output CSV");

    std::string emb_file, probe_config, eval_out;
    auto* eval = app.add_subcommand("eval", "Linear-probe evaluation of embeddings");
    eval->add_option("--embeddings", emb_file, "embeddings CSV")->required();
    eval->add_option("--data", data_dir, "data directory (labels + split)")->required();
    eval->add_option("--probe-config", probe_config, "probe config JSON");
    eval->add_option("--set", overrides, "key=value probe overrides");
    eval->add_option("--out", eval_out, "report JSON output");

    std::uint64_t gc_seed = 0;
    auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference gradient check");
    gradcheck->add_option("--data", data_dir, "data directory (default: built-in fixture)");
    gradcheck->add_option("--config", config_file, "JSON config file");
    gradcheck->add_option("--set", overrides, "key=value config overrides");
    gradcheck->add_option("--seed", gc_seed, "seed");

    std::string spec_file;
    auto* synth = app.add_subcommand("synth", "Generate a synthetic SBM data directory");
    synth->add_option("--spec", spec_file, "SBM spec JSON")->required();
    synth->add_option("--out", out_dir, "output data directory")->required();

    std::string grid_file, sweep_out = "sweep.csv";
    int jobs = 1;
    auto* sweep = app.add_subcommand("sweep", "Grid sweep over lambda, p_h, p_a (and k, l)");
    sweep->add_option("--grid", grid_file, "grid JSON file")->required();
    sweep->add_option("--data", data_dir, "data directory")->required();
    sweep->add_option("--out", sweep_out, "output CSV");
    sweep->add_option("--jobs", jobs, "worker pool width");

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand(train))
            return run_train(data_dir, config_file, overrides, out_dir, resume_path);
        if (app.got_subcommand(embed)) return run_embed(data_dir, ckpt_path, emb_out);
        if (app.got_subcommand(eval))
            return run_eval(emb_file, data_dir, probe_config, overrides, eval_out);
        if (app.got_subcommand(gradcheck))
            return run_gradcheck(data_dir, config_file, overrides, gc_seed);
        if (app.got_subcommand(synth)) return run_synth(spec_file, out_dir);
        if (app.got_subcommand(sweep)) return run_sweep(grid_file, data_dir, sweep_out, jobs);
    } catch (const milbo::DataFormatError& e) {
        std::cerr << "error: data-format: " << e.what() << "\n";
        return 1;
    } catch (const milbo::NonFiniteLoss& e) {
        std::cerr << "error: non-finite-loss: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: config: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: runtime: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
