// cpsw: dataset generation, propensity-weighted training, causal-graph
// analysis, SCM queries, generalization bounds and run reports from one
// binary. Exit codes: 0 success, 1 computational failure, 2 usage/config.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "cpsw/bounds.hpp"
#include "cpsw/causal_graph.hpp"
#include "cpsw/config.hpp"
#include "cpsw/datasets.hpp"
#include "cpsw/kernels.hpp"
#include "cpsw/learner.hpp"
#include "cpsw/propensity.hpp"
#include "cpsw/scm.hpp"
#include "cpsw/spectral.hpp"

namespace fs = std::filesystem;
using namespace cpsw;
using nlohmann::json;

namespace {

// Output paths resolve under CPSW_OUT_ROOT when it is set.
fs::path resolve_out(const std::string& path) {
    const char* root = std::getenv("CPSW_OUT_ROOT");
    if (root && *root && fs::path(path).is_relative())
        return fs::path(root) / path;
    return fs::path(path);
}

scm::Assignment parse_assignment(const scm::DiscreteScm& model,
                                 const std::string& text) {
    scm::Assignment out;
    for (const auto& item : config::split_list(text)) {
        const auto eq = item.find('=');
        if (eq == std::string::npos)
            fail(ErrorCode::config_invalid,
                 "expected NAME=value, got `" + item + "`");
        const std::string name = item.substr(0, eq);
        const std::string value = item.substr(eq + 1);
        out[name] = model.value_index(name, value);
    }
    return out;
}

std::set<std::string> parse_name_set(const std::string& text) {
    const auto list = config::split_list(text);
    return {list.begin(), list.end()};
}

learner::TrainDomain domain_view(const data::DomainDataset& d) {
    learner::TrainDomain td;
    td.name = d.name;
    td.input_dim = d.input_dim();
    td.height = d.height;
    td.width = d.width;
    td.channels = d.channels;
    td.images = d.images.data();
    td.labels = d.labels.data();
    td.clean_labels = d.clean_labels.empty() ? nullptr
                                             : d.clean_labels.data();
    td.count = d.count();
    return td;
}

struct LoadedExperiment {
    std::vector<data::DomainDataset> domains;
    std::vector<std::size_t> train_idx, test_idx;
    learner::TrainConfig train_cfg;
    std::string score; // "noisy" or "clean"
    std::string out_dir;
    std::string name;
};

learner::TrainConfig train_config_from(const config::Config& cfg) {
    learner::TrainConfig tc;
    tc.seed = cfg.get_u64("seed", 0);
    tc.hidden_dim = cfg.get_int("model.hidden", 64);
    tc.step = cfg.get_double("model.step", 0.1);
    tc.batch_size = cfg.get_int("model.batch", 128);
    tc.epochs = cfg.get_int("model.epochs", 20);
    tc.omega = cfg.get_double("model.omega", 10.0);
    tc.alpha = cfg.get_double("objective.alpha", 0.0);
    tc.beta = cfg.get_double("objective.beta", 0.0);
    tc.filter_size = cfg.get_int("pipeline.filter_size", 0);
    tc.delta = cfg.get_double("pipeline.delta", 1.0);
    tc.spurious_clusters = cfg.get_int("pipeline.spurious_clusters", 2);
    tc.floor = cfg.get_double("pipeline.floor", 0.05);
    tc.refresh_period = cfg.get_int("pipeline.refresh", 1);
    tc.kmeans_iters = cfg.get_int("pipeline.kmeans_iters", 30);
    tc.self_normalize = cfg.get_bool("pipeline.self_normalize", false);
    tc.complement_masks = cfg.get_bool("pipeline.complement_masks", false);
    tc.square_masks = cfg.get_bool("pipeline.square_masks", false);
    tc.freeze_head_for_ps = cfg.get_bool("pipeline.freeze_head", false);
    tc.pool_propensity = cfg.get_bool("pipeline.pool", false);
    return tc;
}

LoadedExperiment load_experiment(const config::Config& cfg) {
    LoadedExperiment exp;
    exp.train_cfg = train_config_from(cfg);
    exp.score = cfg.get("data.score", "noisy");
    exp.train_cfg.score_clean_labels = exp.score == "clean";
    exp.out_dir = cfg.get("out", "runs/run");
    exp.name = cfg.get("name", "run");

    const std::string dir = cfg.require("data.dir");
    const auto names = cfg.get_list("data.domains");
    if (names.size() < 2)
        fail(ErrorCode::config_invalid,
             "data.domains needs at least two entries");
    for (const auto& n : names) {
        const fs::path path = fs::path(dir) / (n + ".cpsw");
        if (!fs::exists(path))
            fail(ErrorCode::file_not_found, "dataset not found: " +
                                                path.string());
        exp.domains.push_back(data::load_dataset(path.string()));
    }
    const int holdout = cfg.get_int("data.holdout",
                                    static_cast<int>(names.size()) - 1);
    const data::Split split =
        data::split_domains(exp.domains.size(),
                            static_cast<std::size_t>(holdout));
    exp.train_idx = split.train;
    exp.test_idx = split.test;
    return exp;
}

struct RunOutcome {
    double test_accuracy = 0.0;
    double test_accuracy_clean = 0.0;
    json summary;
};

RunOutcome run_training(const LoadedExperiment& exp, bool write_outputs) {
    std::vector<learner::TrainDomain> train, test;
    for (auto i : exp.train_idx) train.push_back(domain_view(exp.domains[i]));
    for (auto i : exp.test_idx) test.push_back(domain_view(exp.domains[i]));

    const learner::TrainResult result =
        learner::train(exp.train_cfg, train, test);

    RunOutcome out;
    json final_rows = json::array();
    for (const auto& row : result.history) {
        if (row.epoch != exp.train_cfg.epochs - 1) continue;
        final_rows.push_back({{"domain", row.domain},
                              {"split", row.split},
                              {"accuracy", row.accuracy},
                              {"accuracy_clean", row.accuracy_clean}});
        if (row.split == "test") {
            out.test_accuracy = row.accuracy;
            out.test_accuracy_clean = row.accuracy_clean;
        }
    }
    out.summary = {{"name", exp.name},
                   {"alpha", exp.train_cfg.alpha},
                   {"beta", exp.train_cfg.beta},
                   {"seed", exp.train_cfg.seed},
                   {"epochs", exp.train_cfg.epochs},
                   {"score", exp.score},
                   {"holdout", exp.test_idx.empty()
                                   ? ""
                                   : exp.domains[exp.test_idx[0]].name},
                   {"kernel_backend",
                    kernels::backend_name(kernels::active_backend())},
                   {"final", final_rows},
                   {"test_accuracy", out.test_accuracy},
                   {"test_accuracy_clean", out.test_accuracy_clean}};

    if (write_outputs) {
        const fs::path dir = resolve_out(exp.out_dir);
        fs::create_directories(dir);
        learner::write_metrics_csv(result.history,
                                   (dir / "metrics.csv").string());
        learner::save_checkpoint(result.params,
                                 (dir / "checkpoint.bin").string());
        std::ofstream sf(dir / "summary.json");
        sf << out.summary.dump(2) << "\n";
    }
    return out;
}

void print_path_list(const graph::CausalDag& g,
                     const std::vector<graph::Path>& paths) {
    if (paths.empty()) {
        std::cout << "  (none)\n";
        return;
    }
    for (const auto& p : paths) {
        std::cout << "  " << graph::format_path(g, p);
        std::vector<std::string> roles;
        for (std::size_t k = 1; k + 1 < p.nodes.size(); ++k) {
            const char* role = "";
            switch (p.role_at(k)) {
                case graph::NodeRole::chain: role = "chain"; break;
                case graph::NodeRole::fork: role = "fork"; break;
                case graph::NodeRole::collider: role = "collider"; break;
                default: break;
            }
            roles.push_back(g.name_of(p.nodes[k]) + ":" + role);
        }
        if (!roles.empty()) {
            std::cout << "   [";
            for (std::size_t i = 0; i < roles.size(); ++i)
                std::cout << (i ? ", " : "") << roles[i];
            std::cout << "]";
        }
        std::cout << "\n";
    }
}

std::vector<double> read_propensity_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::file_not_found, "cannot open " + path);
    std::vector<double> pis;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        // Take the last comma-separated field; skip non-numeric headers.
        const auto comma = line.find_last_of(',');
        const std::string field =
            comma == std::string::npos ? line : line.substr(comma + 1);
        try {
            pis.push_back(std::stod(field));
        } catch (const std::exception&) {
            continue;
        }
    }
    if (pis.empty())
        fail(ErrorCode::config_invalid, "no propensities in " + path);
    return pis;
}

int exit_code_for(const Error& e) {
    switch (e.code()) {
        case ErrorCode::config_invalid:
        case ErrorCode::invalid_spec:
        case ErrorCode::file_not_found:
        case ErrorCode::parse_error:
        case ErrorCode::invalid_split:
        case ErrorCode::unknown_node:
        case ErrorCode::value_out_of_domain:
        case ErrorCode::invalid_confidence:
            return 2;
        default:
            return 1;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"causal propensity-score-weighting toolkit"};
    app.require_subcommand(1);

    // --- generate-data -----------------------------------------------------
    auto* gen = app.add_subcommand("generate-data",
                                   "generate biased color-digit domains");
    std::string gen_out = "data";
    std::uint64_t gen_seed = 0;
    std::string gen_biases = "0.1,0.3,0.9";
    std::string gen_names;
    double gen_noise = 0.25;
    std::size_t gen_n = 5000;
    int gen_channels = 3;
    std::string gen_style = "background";
    bool gen_noise_after_color = false;
    std::string gen_idx_images, gen_idx_labels;
    gen->add_option("--out", gen_out, "output directory");
    gen->add_option("--seed", gen_seed, "master seed");
    gen->add_option("--biases", gen_biases, "comma list of bias degrees");
    gen->add_option("--names", gen_names, "comma list of domain names");
    gen->add_option("--noise", gen_noise, "label flip rate");
    gen->add_option("--n", gen_n, "samples per domain");
    gen->add_option("--channels", gen_channels, "2 or 3");
    gen->add_option("--style", gen_style, "background | strokes");
    gen->add_flag("--noise-after-color", gen_noise_after_color,
                  "color from the clean label, then flip");
    gen->add_option("--idx-images", gen_idx_images, "IDX image file");
    gen->add_option("--idx-labels", gen_idx_labels, "IDX label file");

    // --- train ---------------------------------------------------------------
    auto* train_cmd = app.add_subcommand("train", "run the training pipeline");
    std::string train_config_path;
    std::optional<std::uint64_t> train_seed;
    std::optional<std::string> train_out, train_name;
    std::optional<double> train_alpha, train_beta;
    train_cmd->add_option("--config", train_config_path, "config file")
        ->required();
    train_cmd->add_option("--seed", train_seed, "seed override");
    train_cmd->add_option("--out", train_out, "output dir override");
    train_cmd->add_option("--name", train_name, "run name override");
    train_cmd->add_option("--alpha", train_alpha, "alpha override");
    train_cmd->add_option("--beta", train_beta, "beta override");

    // --- sweep ---------------------------------------------------------------
    auto* sweep_cmd = app.add_subcommand("sweep", "alpha/beta grid sweep");
    std::string sweep_config_path;
    std::string sweep_alphas = "1,0.1,0.01";
    std::string sweep_betas = "1,0.1,0.01,0.001";
    std::string sweep_seeds = "0";
    std::string sweep_out = "runs/sweep";
    sweep_cmd->add_option("--config", sweep_config_path, "config file")
        ->required();
    sweep_cmd->add_option("--alphas", sweep_alphas, "alpha grid");
    sweep_cmd->add_option("--betas", sweep_betas, "beta grid");
    sweep_cmd->add_option("--seeds", sweep_seeds, "seed list");
    sweep_cmd->add_option("--out", sweep_out, "sweep output dir");

    // --- analyze-graph ---------------------------------------------------------
    auto* ag = app.add_subcommand("analyze-graph",
                                  "paths, d-separation, backdoor analysis");
    std::string ag_file;
    std::string ag_paths, ag_dsep, ag_given, ag_backdoor, ag_adjust;
    ag->add_option("file", ag_file, "dag or scm text file")->required();
    ag->add_option("--paths", ag_paths, "X,Y: list simple paths");
    ag->add_option("--dsep", ag_dsep, "X,Y: d-separation verdict");
    ag->add_option("--given", ag_given, "conditioning set for --dsep");
    ag->add_option("--backdoor", ag_backdoor, "T,O: backdoor paths");
    ag->add_option("--adjust", ag_adjust,
                   "candidate adjustment set for --backdoor");

    // --- scm -------------------------------------------------------------------
    auto* scm_cmd = app.add_subcommand("scm", "exact SCM queries");
    std::string scm_file, scm_outcome, scm_given, scm_do, scm_adjust_for;
    std::string scm_treatment, scm_noncf, scm_t1, scm_t2, scm_witness;
    bool scm_use_conditioning = false;
    scm_cmd->add_option("file", scm_file, "scm text file")->required();
    scm_cmd->add_option("--outcome", scm_outcome, "e.g. Y=1");
    scm_cmd->add_option("--given", scm_given, "e.g. C=1,S=0");
    scm_cmd->add_option("--do", scm_do, "intervention, e.g. C=1");
    scm_cmd->add_option("--treatment", scm_treatment,
                        "treatment assignment for --adjust-for");
    scm_cmd->add_option("--adjust-for", scm_adjust_for,
                        "adjustment set, e.g. S or T,Z");
    scm_cmd->add_option("--check-nonconfounding", scm_noncf, "X,Y");
    scm_cmd->add_option("--t1", scm_t1, "partition T1");
    scm_cmd->add_option("--t2", scm_t2, "partition T2");
    scm_cmd->add_flag("--use-conditioning", scm_use_conditioning,
                      "apply the fixture's conditioning slice");
    scm_cmd->add_option("--witness", scm_witness,
                        "S,Y: spurious-correlation witness search");

    // --- bound -------------------------------------------------------------------
    auto* bound_cmd = app.add_subcommand("bound",
                                         "generalization bound and coverage");
    double bd_risk = 0.0, bd_omega = 1.0, bd_hyp = 1.0, bd_delta = 0.05;
    std::string bd_pi_file, bd_pi_inline;
    bool bd_coverage = false;
    double bd_bias = 0.9, bd_noise = 0.25;
    std::size_t bd_n = 2000;
    int bd_trials = 200;
    std::uint64_t bd_seed = 0;
    std::string bd_out;
    bound_cmd->add_option("--risk", bd_risk, "empirical PSW risk");
    bound_cmd->add_option("--omega", bd_omega, "loss bound");
    bound_cmd->add_option("--hypotheses", bd_hyp, "|H|");
    bound_cmd->add_option("--delta", bd_delta, "confidence level");
    bound_cmd->add_option("--pi-csv", bd_pi_file,
                          "propensity file (last CSV field per line)");
    bound_cmd->add_option("--pi", bd_pi_inline,
                          "inline propensities, e.g. 0.9:900,0.1:100");
    bound_cmd->add_flag("--coverage", bd_coverage, "run coverage experiment");
    bound_cmd->add_option("--bias", bd_bias, "scenario bias degree");
    bound_cmd->add_option("--noise", bd_noise, "scenario label noise");
    bound_cmd->add_option("--n", bd_n, "scenario population size");
    bound_cmd->add_option("--trials", bd_trials, "coverage trials");
    bound_cmd->add_option("--seed", bd_seed, "coverage seed");
    bound_cmd->add_option("--out", bd_out, "per-trial CSV path");

    // --- report --------------------------------------------------------------------
    auto* report_cmd = app.add_subcommand("report", "summarize run outputs");
    std::string report_dir = "runs";
    report_cmd->add_option("--runs", report_dir, "directory of run subdirs");

    // --- casestudy -----------------------------------------------------------------
    auto* cs_cmd = app.add_subcommand(
        "casestudy", "dump per-sample cluster assignments and propensities");
    std::string cs_config_path, cs_checkpoint, cs_out = "casestudy.csv";
    cs_cmd->add_option("--config", cs_config_path, "config file")->required();
    cs_cmd->add_option("--checkpoint", cs_checkpoint,
                       "encoder checkpoint (fresh init when absent)");
    cs_cmd->add_option("--out", cs_out, "output CSV");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen) {
            data::GenSpec spec;
            spec.seed = gen_seed;
            spec.noise = gen_noise;
            spec.per_domain = gen_n;
            spec.channels = gen_channels;
            spec.noise_after_color = gen_noise_after_color;
            spec.biases.clear();
            for (const auto& b : config::split_list(gen_biases))
                spec.biases.push_back(std::stod(b));
            if (!gen_names.empty())
                spec.names = config::split_list(gen_names);
            if (gen_style == "strokes")
                spec.color_style = data::ColorStyle::tinted_strokes;
            else if (gen_style != "background")
                fail(ErrorCode::config_invalid,
                     "style must be background or strokes");
            if (!gen_idx_images.empty() || !gen_idx_labels.empty()) {
                spec.source = data::SampleSource::idx_files;
                spec.idx_images_path = gen_idx_images;
                spec.idx_labels_path = gen_idx_labels;
            }
            const auto domains = data::generate(spec);
            const fs::path dir = resolve_out(gen_out);
            fs::create_directories(dir);
            json manifest = {{"seed", spec.seed},
                             {"noise", spec.noise},
                             {"per_domain", spec.per_domain},
                             {"channels", spec.channels},
                             {"style", gen_style},
                             {"domains", json::array()}};
            for (const auto& d : domains) {
                const fs::path file = dir / (d.name + ".cpsw");
                data::save_dataset(d, file.string());
                std::ostringstream sum;
                sum << std::hex << std::setw(16) << std::setfill('0')
                    << data::file_checksum(file.string());
                manifest["domains"].push_back({{"name", d.name},
                                               {"file", file.filename()},
                                               {"bias", d.bias},
                                               {"count", d.count()},
                                               {"checksum", sum.str()}});
            }
            std::ofstream mf(dir / "manifest.json");
            mf << manifest.dump(2) << "\n";
            std::cout << "wrote " << domains.size() << " domains to " << dir
                      << "\n";
        } else if (*train_cmd) {
            config::Config cfg = config::load_config_file(train_config_path);
            if (train_seed) cfg.set("seed", std::to_string(*train_seed));
            if (train_out) cfg.set("out", *train_out);
            if (train_name) cfg.set("name", *train_name);
            if (train_alpha)
                cfg.set("objective.alpha", std::to_string(*train_alpha));
            if (train_beta)
                cfg.set("objective.beta", std::to_string(*train_beta));
            const LoadedExperiment exp = load_experiment(cfg);
            const RunOutcome outcome = run_training(exp, true);
            std::cout << "run " << exp.name << ": held-out accuracy "
                      << std::fixed << std::setprecision(4)
                      << (exp.score == "clean" ? outcome.test_accuracy_clean
                                               : outcome.test_accuracy)
                      << " (outputs in " << resolve_out(exp.out_dir).string()
                      << ")\n";
        } else if (*sweep_cmd) {
            config::Config cfg = config::load_config_file(sweep_config_path);
            const fs::path dir = resolve_out(sweep_out);
            fs::create_directories(dir);
            std::ofstream csv(dir / "sweep.csv");
            csv << "alpha,beta,seed,test_accuracy,test_accuracy_clean\n";
            double best_acc = -1.0, best_alpha = 0.0, best_beta = 0.0;
            for (const auto& alpha : config::split_list(sweep_alphas)) {
                for (const auto& beta : config::split_list(sweep_betas)) {
                    double mean_acc = 0.0;
                    int runs = 0;
                    for (const auto& seed : config::split_list(sweep_seeds)) {
                        config::Config c = cfg;
                        c.set("objective.alpha", alpha);
                        c.set("objective.beta", beta);
                        c.set("seed", seed);
                        const LoadedExperiment exp = load_experiment(c);
                        const RunOutcome outcome = run_training(exp, false);
                        const double acc = exp.score == "clean"
                                               ? outcome.test_accuracy_clean
                                               : outcome.test_accuracy;
                        csv << alpha << ',' << beta << ',' << seed << ','
                            << outcome.test_accuracy << ','
                            << outcome.test_accuracy_clean << "\n";
                        csv.flush();
                        mean_acc += acc;
                        ++runs;
                    }
                    mean_acc /= runs;
                    std::cout << "alpha=" << alpha << " beta=" << beta
                              << " mean held-out accuracy " << std::fixed
                              << std::setprecision(4) << mean_acc << "\n";
                    if (mean_acc > best_acc) {
                        best_acc = mean_acc;
                        best_alpha = std::stod(alpha);
                        best_beta = std::stod(beta);
                    }
                }
            }
            std::cout << "best cell: alpha=" << best_alpha
                      << " beta=" << best_beta << " accuracy=" << std::fixed
                      << std::setprecision(4) << best_acc << "\n";
        } else if (*ag) {
            std::ifstream in(ag_file);
            if (!in)
                fail(ErrorCode::file_not_found, "cannot open " + ag_file);
            std::ostringstream buf;
            buf << in.rdbuf();
            const std::string text = buf.str();
            const bool is_scm = text.find("cpt ") != std::string::npos;
            std::optional<scm::DiscreteScm> model;
            if (is_scm) model = scm::parse_scm_text(text);
            const graph::CausalDag g =
                is_scm ? model->dag : graph::parse_dag_text(text);

            std::cout << "graph: " << g.node_count() << " nodes, "
                      << g.edges().size() << " edges\n";
            if (ag_paths.empty() && ag_dsep.empty() && ag_backdoor.empty()) {
                for (const auto& [p, c] : g.edges())
                    std::cout << "  " << g.name_of(p) << " -> "
                              << g.name_of(c) << "\n";
            }
            if (!ag_paths.empty()) {
                const auto pair = config::split_list(ag_paths);
                if (pair.size() != 2)
                    fail(ErrorCode::config_invalid, "--paths wants X,Y");
                std::cout << "paths " << pair[0] << " .. " << pair[1] << ":\n";
                print_path_list(g,
                                graph::enumerate_paths(g, pair[0], pair[1]));
            }
            if (!ag_dsep.empty()) {
                const auto pair = config::split_list(ag_dsep);
                if (pair.size() != 2)
                    fail(ErrorCode::config_invalid, "--dsep wants X,Y");
                const auto z = parse_name_set(ag_given);
                const bool verdict =
                    graph::is_d_separated(g, {pair[0], pair[1], z});
                std::cout << "d-separated: " << (verdict ? "true" : "false")
                          << "\n";
            }
            if (!ag_backdoor.empty()) {
                const auto pair = config::split_list(ag_backdoor);
                if (pair.size() != 2)
                    fail(ErrorCode::config_invalid, "--backdoor wants T,O");
                const auto paths =
                    graph::backdoor_paths(g, pair[0], pair[1]);
                std::cout << "backdoor paths " << pair[0] << " .. " << pair[1]
                          << ":\n";
                print_path_list(g, paths);
                if (!ag_adjust.empty() || true) {
                    const auto z = parse_name_set(ag_adjust);
                    const bool ok =
                        graph::satisfies_backdoor(g, pair[0], pair[1], z);
                    std::cout << "backdoor criterion for {"
                              << ag_adjust << "}: "
                              << (ok ? "satisfied" : "violated") << "\n";
                    if (model) {
                        const scm::JointTable jt = scm::joint(*model);
                        const scm::Assignment treatment{{pair[0], 1}};
                        const scm::Assignment outcome{{pair[1], 1}};
                        const double truth = scm::do_probability(
                            *model, treatment, outcome);
                        const double adj = scm::adjustment_estimate(
                            jt, treatment, outcome, z);
                        std::cout << std::setprecision(12)
                                  << "P(outcome=1 | do(treatment=1)) = "
                                  << truth << "\n"
                                  << "adjustment estimate        = " << adj
                                  << "\n"
                                  << "bias gap                   = "
                                  << std::abs(adj - truth) << "\n";
                    }
                }
            }
        } else if (*scm_cmd) {
            const scm::DiscreteScm model = scm::load_scm_file(scm_file);
            scm::JointTable jt = scm::joint(model);
            if (scm_use_conditioning && !model.conditioning.empty())
                jt = scm::condition(jt, model.conditioning);

            if (!scm_noncf.empty()) {
                const auto pair = config::split_list(scm_noncf);
                if (pair.size() != 2)
                    fail(ErrorCode::config_invalid,
                         "--check-nonconfounding wants X,Y");
                const bool stat = scm::check_nonconfounding_statistical(
                    jt, model.dag, pair[0], pair[1], parse_name_set(scm_t1),
                    parse_name_set(scm_t2));
                const bool causal = scm::check_nonconfounding_causal(
                    model, pair[0], pair[1]);
                std::cout << "statistical non-confounding: "
                          << (stat ? "true" : "false") << "\n"
                          << "causal non-confounding:      "
                          << (causal ? "true" : "false") << "\n";
            } else if (!scm_witness.empty()) {
                const auto pair = config::split_list(scm_witness);
                if (pair.size() != 2)
                    fail(ErrorCode::config_invalid, "--witness wants S,Y");
                const auto w = scm::spurious_correlation_witness(
                    jt, model.dag, pair[0], pair[1]);
                if (!w) {
                    std::cout << "witness: none\n";
                } else {
                    auto render = [](const std::set<std::string>& s) {
                        std::string out;
                        for (const auto& v : s)
                            out += (out.empty() ? "" : ",") + v;
                        return out.empty() ? "{}" : "{" + out + "}";
                    };
                    std::cout << "witness: Z1=" << w->z1
                              << " S1=" << render(w->s1) << " Z2=" << w->z2
                              << " S2=" << render(w->s2) << "\n";
                }
            } else if (!scm_adjust_for.empty()) {
                if (scm_outcome.empty() || scm_treatment.empty())
                    fail(ErrorCode::config_invalid,
                         "--adjust-for needs --outcome and --treatment");
                const auto outcome = parse_assignment(model, scm_outcome);
                const auto treatment = parse_assignment(model, scm_treatment);
                const auto z = parse_name_set(scm_adjust_for);
                const double adj =
                    scm::adjustment_estimate(jt, treatment, outcome, z);
                const double truth =
                    scm::do_probability(model, treatment, outcome);
                std::cout << std::setprecision(12)
                          << "adjustment estimate = " << adj << "\n"
                          << "interventional truth = " << truth << "\n"
                          << "bias gap = " << std::abs(adj - truth) << "\n";
            } else if (!scm_outcome.empty()) {
                const auto outcome = parse_assignment(model, scm_outcome);
                double value;
                if (!scm_do.empty()) {
                    const auto iv = parse_assignment(model, scm_do);
                    scm::DiscreteScm mutilated = model;
                    for (const auto& [name, v] : iv)
                        mutilated = scm::intervene(
                            mutilated,
                            {name,
                             model.domains[model.dag.index_of(name)][v]});
                    scm::JointTable jm = scm::joint(mutilated);
                    const auto given = scm_given.empty()
                                           ? scm::Assignment{}
                                           : parse_assignment(model,
                                                              scm_given);
                    value = scm::query(jm, outcome, given);
                } else {
                    const auto given = scm_given.empty()
                                           ? scm::Assignment{}
                                           : parse_assignment(model,
                                                              scm_given);
                    value = scm::query(jt, outcome, given);
                }
                std::cout << std::setprecision(12) << value << "\n";
            } else {
                std::cout << scm::scm_to_text(model);
            }
        } else if (*bound_cmd) {
            if (bd_coverage) {
                const bounds::Scenario sc = bounds::make_binary_bias_scenario(
                    bd_bias, bd_noise, bd_n, bd_hyp);
                const auto res = bounds::coverage_experiment(
                    sc, bd_trials, bd_delta, bd_seed);
                std::cout << std::setprecision(6)
                          << "exact risk      = " << res.exact_risk << "\n"
                          << "mean empirical  = " << res.mean_empirical
                          << "\n"
                          << "slack           = " << res.slack << "\n"
                          << "coverage        = " << res.coverage << "\n";
                if (!bd_out.empty()) {
                    const fs::path path = resolve_out(bd_out);
                    if (path.has_parent_path())
                        fs::create_directories(path.parent_path());
                    std::ofstream csv(path);
                    csv << "empirical_risk,bound,exact_risk,covered\n";
                    csv << std::setprecision(12);
                    for (const auto& t : res.trials)
                        csv << t.empirical_risk << ',' << t.bound << ','
                            << t.exact_risk << ',' << (t.covered ? 1 : 0)
                            << "\n";
                }
            } else {
                bounds::BoundInput input;
                input.empirical_risk = bd_risk;
                input.omega = bd_omega;
                input.hypothesis_count = bd_hyp;
                input.confidence_delta = bd_delta;
                if (!bd_pi_file.empty()) {
                    input.propensities = read_propensity_file(
                        resolve_out(bd_pi_file).string());
                } else if (!bd_pi_inline.empty()) {
                    for (const auto& item :
                         config::split_list(bd_pi_inline)) {
                        const auto colon = item.find(':');
                        const double pi = std::stod(item.substr(0, colon));
                        const std::size_t count =
                            colon == std::string::npos
                                ? 1
                                : std::stoull(item.substr(colon + 1));
                        input.propensities.insert(input.propensities.end(),
                                                  count, pi);
                    }
                } else {
                    fail(ErrorCode::config_invalid,
                         "bound needs --pi or --pi-csv (or --coverage)");
                }
                std::cout << std::setprecision(12)
                          << "slack = " << bounds::psw_slack(input) << "\n"
                          << "bound = " << bounds::psw_bound(input) << "\n";
            }
        } else if (*report_cmd) {
            const fs::path dir = resolve_out(report_dir);
            if (!fs::exists(dir))
                fail(ErrorCode::file_not_found,
                     "run directory not found: " + dir.string());
            // name -> holdout -> accuracies
            std::map<std::string, std::map<std::string, std::vector<double>>>
                table;
            std::set<std::string> holdouts;
            for (const auto& entry : fs::directory_iterator(dir)) {
                const fs::path summary = entry.path() / "summary.json";
                if (!fs::exists(summary)) continue;
                std::ifstream in(summary);
                json j;
                in >> j;
                const std::string name = j.value("name", "run");
                const std::string holdout = j.value("holdout", "?");
                const std::string score = j.value("score", "noisy");
                const double acc = score == "clean"
                                       ? j.value("test_accuracy_clean", 0.0)
                                       : j.value("test_accuracy", 0.0);
                table[name][holdout].push_back(acc);
                holdouts.insert(holdout);
            }
            if (table.empty()) {
                std::cout << "no runs found in " << dir << "\n";
                return 0;
            }
            std::cout << std::left << std::setw(18) << "algorithm";
            for (const auto& h : holdouts)
                std::cout << std::right << std::setw(10) << h;
            std::cout << std::right << std::setw(10) << "avg" << "\n";
            for (const auto& [name, cols] : table) {
                std::cout << std::left << std::setw(18) << name;
                double sum = 0.0;
                int n = 0;
                for (const auto& h : holdouts) {
                    const auto it = cols.find(h);
                    if (it == cols.end()) {
                        std::cout << std::right << std::setw(10) << "-";
                        continue;
                    }
                    // Median across seeds.
                    std::vector<double> accs = it->second;
                    std::sort(accs.begin(), accs.end());
                    const double median =
                        accs.size() % 2
                            ? accs[accs.size() / 2]
                            : 0.5 * (accs[accs.size() / 2 - 1] +
                                     accs[accs.size() / 2]);
                    std::cout << std::right << std::setw(10) << std::fixed
                              << std::setprecision(4) << median;
                    sum += median;
                    ++n;
                }
                if (n > 0)
                    std::cout << std::right << std::setw(10) << std::fixed
                              << std::setprecision(4) << sum / n;
                std::cout << "\n";
            }
        } else if (*cs_cmd) {
            config::Config cfg = config::load_config_file(cs_config_path);
            const LoadedExperiment exp = load_experiment(cfg);
            std::vector<learner::TrainDomain> train;
            for (auto i : exp.train_idx)
                train.push_back(domain_view(exp.domains[i]));
            learner::ModelParams params;
            if (!cs_checkpoint.empty()) {
                params = learner::load_checkpoint(cs_checkpoint);
            } else {
                rng::Rng init = rng::derive(exp.train_cfg.seed, "init");
                params = learner::ModelParams::init(
                    train.front().input_dim, exp.train_cfg.hidden_dim, 2,
                    init);
            }
            const auto rows =
                learner::propensity_case_study(exp.train_cfg, train, params);
            const fs::path path = resolve_out(cs_out);
            if (path.has_parent_path())
                fs::create_directories(path.parent_path());
            std::ofstream csv(path);
            csv << "sample,domain,c_cluster,s_cluster,propensity\n";
            csv << std::setprecision(12);
            for (const auto& r : rows)
                csv << r.sample << ',' << r.domain << ',' << r.c_cluster
                    << ',' << r.s_cluster << ',' << r.propensity << "\n";
            std::cout << "wrote " << rows.size() << " rows to " << path
                      << "\n";
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
