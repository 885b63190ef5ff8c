#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#if __has_include(<CLI11.hpp>)
#include <CLI11.hpp>
#else
#include <CLI/CLI.hpp>
#endif

#include "dfprune/cutoff.hpp"
#include "dfprune/dataset.hpp"
#include "dfprune/errors.hpp"
#include "dfprune/model_io.hpp"
#include "dfprune/network.hpp"
#include "dfprune/pruner.hpp"
#include "dfprune/saliency.hpp"
#include "dfprune/trainer.hpp"

namespace fs = std::filesystem;
using namespace dfprune;

namespace {

// Bad flag combinations detected after CLI11 has parsed; exit code 2.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct DataOptions {
    bool synthetic = false;
    std::string generator = "blobs";
    std::size_t samples = 0;  // 0 keeps the generator default
    std::string csv;
    bool skip_header = false;
    bool raw_features = false;
    std::uint64_t data_seed = 2024;
    std::string split = "test";

    bool given() const { return synthetic || !csv.empty(); }
};

void add_data_options(CLI::App* app, DataOptions& o, bool with_split) {
    auto* syn = app->add_flag("--synthetic", o.synthetic, "Generate a synthetic dataset");
    app->add_option("--generator", o.generator, "Synthetic generator")
        ->check(CLI::IsMember({"blobs", "spamlike"}))
        ->capture_default_str();
    app->add_option("--samples", o.samples, "Synthetic sample count (0 = generator default)");
    auto* csv = app->add_option("--data", o.csv, "CSV dataset: feature columns then an integer label")
                    ->check(CLI::ExistingFile);
    syn->excludes(csv);
    app->add_flag("--skip-header", o.skip_header, "Skip the first CSV line");
    app->add_flag("--raw-features", o.raw_features, "Do not standardize CSV features");
    app->add_option("--data-seed", o.data_seed, "Seed for synthetic data and the train/val/test split")
        ->capture_default_str();
    if (with_split) {
        app->add_option("--split", o.split, "Split to evaluate on")
            ->check(CLI::IsMember({"train", "val", "test"}))
            ->capture_default_str();
    }
}

Dataset load_data(const DataOptions& o) {
    if (!o.given()) throw UsageError("a dataset is required: pass --synthetic or --data <file.csv>");
    if (o.synthetic) {
        if (o.generator == "spamlike") {
            SpamLikeConfig cfg;
            if (o.samples) cfg.samples = o.samples;
            return make_spam_like(cfg, o.data_seed);
        }
        BlobConfig cfg;
        if (o.samples) cfg.samples = o.samples;
        return make_blobs(cfg, o.data_seed);
    }
    Dataset ds = load_dataset_csv(o.csv, o.skip_header);
    assign_splits(ds, o.data_seed);
    if (!o.raw_features) standardize(ds);
    return ds;
}

Split parse_split(const std::string& s) {
    if (s == "train") return Split::Train;
    if (s == "val") return Split::Val;
    return Split::Test;
}

std::string fixed(double v, int digits = 2) {
    std::ostringstream os;
    os.imbue(std::locale::classic());
    os.setf(std::ios::fixed);
    os.precision(digits);
    os << v;
    return os.str();
}

void require_parent_dir(const std::string& path) {
    if (path.empty()) return;
    const auto parent = fs::path(path).parent_path();
    if (!parent.empty() && !fs::is_directory(parent)) {
        throw UsageError("output directory does not exist: " + parent.string());
    }
}

std::vector<LayerPlan> parse_plan(const std::vector<std::string>& specs) {
    std::vector<LayerPlan> plan;
    for (const auto& s : specs) {
        const auto colon = s.find(':');
        std::size_t idx = 0;
        std::size_t count = 0;
        std::size_t used_a = 0;
        std::size_t used_b = 0;
        try {
            if (colon == std::string::npos || colon == 0 || colon + 1 == s.size()) throw std::invalid_argument(s);
            if (s[0] == '-' || s[colon + 1] == '-') throw std::invalid_argument(s);
            idx = std::stoul(s.substr(0, colon), &used_a);
            count = std::stoul(s.substr(colon + 1), &used_b);
        } catch (const std::exception&) {
            throw UsageError("--layer expects <index>:<count>, got '" + s + "'");
        }
        if (used_a != colon || used_b != s.size() - colon - 1) {
            throw UsageError("--layer expects <index>:<count>, got '" + s + "'");
        }
        if (!plan.empty() && idx <= plan.back().layer_index) {
            throw UsageError("--layer entries must be given in strictly ascending layer order");
        }
        plan.push_back({idx, count});
    }
    return plan;
}

fs::path trace_path_for(const std::string& base, std::size_t layer, bool multi) {
    if (!multi) return base;
    return base + ".L" + std::to_string(layer);
}

struct PolicyOptions {
    std::string policy = "saliency";
    std::uint64_t seed = 0;
    std::string similarity = "auto";

    PrunePolicy make() const { return PrunePolicy::make(*parse_policy(policy), seed); }
    SimilarityConfig config() const { return SimilarityConfig{*parse_similarity_mode(similarity)}; }
};

void add_policy_options(CLI::App* app, PolicyOptions& o) {
    app->add_option("--policy", o.policy, "Removal policy")
        ->check(CLI::IsMember({"saliency", "nosurgery", "naive", "random"}))
        ->capture_default_str();
    app->add_option("--seed", o.seed, "Seed for the random policy")->capture_default_str();
    app->add_option("--similarity", o.similarity, "Weight-set similarity for saliency policies")
        ->check(CLI::IsMember({"auto", "raw", "heuristic"}))
        ->capture_default_str();
}

// ---------------------------------------------------------------- train

struct TrainOptions {
    DataOptions data;
    TrainConfig cfg;
    std::string activation = "sigmoid";
    std::string out;
};

int cmd_train(const TrainOptions& o) {
    require_parent_dir(o.out);
    TrainConfig cfg = o.cfg;
    cfg.activation = *parse_activation(o.activation);
    const Dataset ds = load_data(o.data);
    const Network net = train(ds, cfg);
    save_model(net, o.out);
    const auto tr = evaluate(net, ds, Split::Train);
    const auto te = evaluate(net, ds, Split::Test);
    std::cout << "model: " << o.out << " (" << net.parameter_count() << " parameters)\n";
    std::cout << "train accuracy: " << fixed(tr.accuracy) << "% (" << tr.samples << " samples)\n";
    std::cout << "test accuracy: " << fixed(te.accuracy) << "% (" << te.samples << " samples)\n";
    return 0;
}

// ---------------------------------------------------------------- prune

struct PruneOptions {
    std::string model;
    std::string out;
    std::string trace;
    std::vector<std::string> layers;
    PolicyOptions policy;
    DataOptions data;
};

int cmd_prune(const PruneOptions& o) {
    require_parent_dir(o.out);
    require_parent_dir(o.trace);
    const auto plan = parse_plan(o.layers);
    const Network net = load_model(o.model);
    for (const auto& p : plan) {
        if (p.layer_index + 1 >= net.layer_count()) {
            throw PreconditionError("layer " + std::to_string(p.layer_index) +
                                    " is not a hidden layer; the model has hidden layers 0.." +
                                    std::to_string(net.layer_count() - 2));
        }
    }
    const auto policy = o.policy.make();
    const auto cfg = o.policy.config();

    std::optional<Dataset> ds;
    if (o.data.given()) ds = load_data(o.data);
    const Split split = parse_split(o.data.split);

    Network current = net;
    std::vector<PruneTrace> traces;
    for (const auto& p : plan) {
        if (p.count == 0) {
            traces.push_back(PruneTrace{p.layer_index, current.layer(p.layer_index).n_out(), {}});
            continue;
        }
        PruneObserver observer;
        std::vector<double> errors;
        if (ds) {
            observer = [&](const PruneStep&, const Network& state) {
                errors.push_back(evaluate(state, *ds, split).error);
            };
        }
        auto r = prune_layer(current, p.layer_index, p.count, policy, cfg, observer);
        for (std::size_t k = 0; k < errors.size(); ++k) r.trace.steps[k].test_error = errors[k];
        current = std::move(r.network);
        traces.push_back(std::move(r.trace));
    }

    save_model(current, o.out);
    if (!o.trace.empty()) {
        const bool multi = traces.size() > 1;
        for (const auto& t : traces) export_trace(t, trace_path_for(o.trace, t.layer_index, multi));
    }

    const std::size_t total = net.parameter_count();
    const std::size_t removed = total - current.parameter_count();
    for (const auto& t : traces) {
        std::cout << "layer " << t.layer_index << ": removed " << t.size() << " of " << t.original_size
                  << " neurons\n";
    }
    std::cout << "parameters: " << total << " -> " << current.parameter_count() << '\n';
    std::cout << "compression: " << fixed(compression_percent(removed, total)) << "%\n";
    if (ds) std::cout << o.data.split << " error after pruning: " << fixed(evaluate(current, *ds, split).error) << "%\n";
    return 0;
}

// ---------------------------------------------------------------- cutoff

struct CutoffOptions {
    std::string trace;
    std::string method = "data-free";
    std::size_t bins = kDefaultBins;
    double fraction = 1.0;
    std::string out;
    // data-driven
    std::string model;
    std::size_t budget = 12;
    double max_increase = 1.0;
    PolicyOptions policy;
    DataOptions data;
};

int cmd_cutoff(const CutoffOptions& o) {
    require_parent_dir(o.out);
    const bool driven = o.method == "data-driven";
    if (driven) {
        if (!o.data.given()) throw UsageError("data-driven cutoff needs a dataset (--synthetic or --data)");
        if (o.model.empty()) throw UsageError("data-driven cutoff needs the unpruned --model");
    }
    const PruneTrace trace = import_trace(o.trace);

    CutoffReport report;
    if (!driven) {
        report = data_free_cutoff(trace, o.bins, o.fraction);
    } else {
        const Network net = load_model(o.model);
        const Dataset ds = load_data(o.data);
        const Split split = parse_split(o.data.split);
        const std::size_t layer = trace.layer_index;
        if (layer + 1 >= net.layer_count()) {
            throw PreconditionError("trace layer " + std::to_string(layer) + " is not a hidden layer of the model");
        }
        // Replay the pruning once and keep every intermediate network.
        std::vector<Network> states{net};
        std::vector<PruneStep> replayed;
        if (!trace.empty()) {
            prune_layer(net, layer, trace.size(), o.policy.make(), o.policy.config(),
                        [&](const PruneStep& s, const Network& state) {
                            replayed.push_back(s);
                            states.push_back(state);
                        });
        }
        for (std::size_t k = 0; k < trace.size(); ++k) {
            if (replayed[k].removed != trace.steps[k].removed || replayed[k].kept != trace.steps[k].kept) {
                throw PreconditionError("trace step " + std::to_string(k + 1) +
                                        " does not match the model under the given --policy/--similarity");
            }
        }
        auto oracle = [&](std::size_t k) { return evaluate(states.at(k), ds, split).error; };
        report = data_driven_cutoff(trace, oracle, o.budget, o.max_increase);
    }
    if (!o.out.empty()) export_report(report, o.out);
    std::cout << summarize(report);
    return 0;
}

// ---------------------------------------------------------------- eval

struct EvalOptions {
    std::vector<std::string> models;
    DataOptions data;
};

int cmd_eval(const EvalOptions& o) {
    const Dataset ds = load_data(o.data);
    const Split split = parse_split(o.data.split);
    for (const auto& path : o.models) {
        const Network net = load_model(path);
        const auto e = evaluate(net, ds, split);
        std::cout << path << ": " << o.data.split << " accuracy " << fixed(e.accuracy) << "%, error "
                  << fixed(e.error) << "% (" << e.samples << " samples, " << net.parameter_count()
                  << " parameters)\n";
    }
    return 0;
}

// ---------------------------------------------------------------- compare

struct CompareOptions {
    std::string model;
    std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
    std::size_t layer = 0;
    std::size_t every = 1;
    std::string out_dir;
    std::string similarity = "auto";
    TrainConfig cfg;
    std::string activation = "sigmoid";
    DataOptions data;
};

int cmd_compare(const CompareOptions& o) {
    if (!fs::is_directory(o.out_dir)) throw UsageError("--out-dir must be an existing directory: " + o.out_dir);
    if (o.every == 0) throw UsageError("--every must be positive");
    const auto start = std::chrono::steady_clock::now();
    const Dataset ds = load_data(o.data);
    const Split split = parse_split(o.data.split);
    const SimilarityConfig sim{*parse_similarity_mode(o.similarity)};

    std::vector<Network> nets;
    std::vector<std::uint64_t> seeds = o.seeds;
    if (!o.model.empty()) {
        nets.push_back(load_model(o.model));
        seeds = {o.seeds.empty() ? 0 : o.seeds.front()};
    } else {
        if (seeds.empty()) throw UsageError("--seeds must list at least one seed");
        for (auto s : seeds) {
            TrainConfig cfg = o.cfg;
            cfg.seed = s;
            cfg.activation = *parse_activation(o.activation);
            nets.push_back(train(ds, cfg));
        }
    }

    const PolicyKind kinds[] = {PolicyKind::SaliencySurgery, PolicyKind::SaliencyNoSurgery,
                                PolicyKind::NaiveMagnitude, PolicyKind::Random};
    std::cout << "policy      baseline  final   mean\n";
    for (PolicyKind kind : kinds) {
        std::vector<CurvePoint> mean;
        for (std::size_t r = 0; r < nets.size(); ++r) {
            const auto curve = error_curve(nets[r], o.layer, ds, PrunePolicy::make(kind, seeds[r]), sim, o.every, split);
            if (mean.empty()) {
                mean = curve;
            } else {
                for (std::size_t k = 0; k < curve.size(); ++k) mean[k].error += curve[k].error;
            }
        }
        double avg = 0.0;
        for (auto& p : mean) {
            p.error /= static_cast<double>(nets.size());
            avg += p.error;
        }
        avg /= static_cast<double>(mean.size());
        const std::string name(to_string(kind));
        export_curve(mean, fs::path(o.out_dir) / (name + ".csv"));
        std::printf("%-11s %7.2f %7.2f %7.2f\n", name.c_str(), mean.front().error, mean.back().error, avg);
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << "curves written to " << o.out_dir << " (" << nets.size() << " network(s), " << fixed(secs, 1)
              << " s)\n";
    return 0;
}

void add_train_options(CLI::App* app, TrainConfig& cfg, std::string& activation, bool with_seed) {
    app->add_option("--hidden", cfg.hidden_units, "Hidden units")->capture_default_str();
    app->add_option("--activation", activation, "Hidden activation")
        ->check(CLI::IsMember({"sigmoid", "relu"}))
        ->capture_default_str();
    app->add_option("--lr", cfg.learning_rate, "SGD learning rate")->capture_default_str();
    app->add_option("--epochs", cfg.epochs, "Training epochs (0 saves the initialization)")->capture_default_str();
    app->add_option("--batch", cfg.batch_size, "Minibatch size")->capture_default_str();
    app->add_option("--weight-decay", cfg.weight_decay, "L2 penalty on non-bias weights")->capture_default_str();
    if (with_seed) app->add_option("--seed", cfg.seed, "Initialization and shuffling seed")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Data-free neuron pruning for fully connected networks"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "dfprune 0.1.0");

    TrainOptions train_o;
    auto* train_cmd = app.add_subcommand("train", "Train a one-hidden-layer classifier and save it");
    add_data_options(train_cmd, train_o.data, false);
    add_train_options(train_cmd, train_o.cfg, train_o.activation, true);
    train_cmd->add_option("--out", train_o.out, "Model file to write")->required();

    PruneOptions prune_o;
    auto* prune_cmd = app.add_subcommand("prune", "Remove hidden neurons and write the pruned model and trace");
    prune_cmd->add_option("--model", prune_o.model, "Input model")->required()->check(CLI::ExistingFile);
    prune_cmd->add_option("--out", prune_o.out, "Pruned model to write")->required();
    prune_cmd->add_option("--trace", prune_o.trace, "Trace CSV (suffixed .L<idx> when several layers are pruned)");
    prune_cmd->add_option("--layer", prune_o.layers, "Plan entry <index>:<count>, repeatable, ascending")
        ->required()
        ->take_all();
    add_policy_options(prune_cmd, prune_o.policy);
    add_data_options(prune_cmd, prune_o.data, true);

    CutoffOptions cutoff_o;
    auto* cutoff_cmd = app.add_subcommand("cutoff", "Predict how many neurons can be removed from a trace");
    cutoff_cmd->add_option("--trace", cutoff_o.trace, "Trace CSV from 'prune'")->required()->check(CLI::ExistingFile);
    cutoff_cmd->add_option("--method", cutoff_o.method, "Cutoff method")
        ->check(CLI::IsMember({"data-free", "data-driven"}))
        ->capture_default_str();
    cutoff_cmd->add_option("--bins", cutoff_o.bins, "Histogram bins (data-free)")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cutoff_cmd->add_option("--fraction", cutoff_o.fraction, "Share of the sub-cutoff steps to keep (data-free)")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    cutoff_cmd->add_option("--out", cutoff_o.out, "Report file (key = value)");
    cutoff_cmd->add_option("--model", cutoff_o.model, "Unpruned model (data-driven)")->check(CLI::ExistingFile);
    cutoff_cmd->add_option("--budget", cutoff_o.budget, "Oracle evaluations (data-driven)")
        ->check(CLI::Range(std::size_t{3}, std::size_t{1} << 20))
        ->capture_default_str();
    cutoff_cmd->add_option("--max-increase", cutoff_o.max_increase, "Allowed error increase in points (data-driven)")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    add_policy_options(cutoff_cmd, cutoff_o.policy);
    add_data_options(cutoff_cmd, cutoff_o.data, true);
    cutoff_o.data.split = "val";
    cutoff_cmd->get_option("--split")->default_str("val");

    EvalOptions eval_o;
    auto* eval_cmd = app.add_subcommand("eval", "Report accuracy of one or more models on a dataset split");
    eval_cmd->add_option("--model", eval_o.models, "Model file, repeatable")->required()->check(CLI::ExistingFile);
    add_data_options(eval_cmd, eval_o.data, true);

    CompareOptions cmp_o;
    auto* cmp_cmd = app.add_subcommand("compare", "Error curves of all four policies, averaged over training seeds");
    cmp_cmd->add_option("--out-dir", cmp_o.out_dir, "Directory for <policy>.csv")->required();
    cmp_cmd->add_option("--model", cmp_o.model, "Use this model instead of training")->check(CLI::ExistingFile);
    cmp_cmd->add_option("--seeds", cmp_o.seeds, "Training seeds (also seed the random policy)")
        ->delimiter(',')
        ->capture_default_str();
    cmp_cmd->add_option("--layer", cmp_o.layer, "Hidden layer to prune")->capture_default_str();
    cmp_cmd->add_option("--every", cmp_o.every, "Evaluate every k-th step")->capture_default_str();
    cmp_cmd->add_option("--similarity", cmp_o.similarity, "Weight-set similarity for saliency policies")
        ->check(CLI::IsMember({"auto", "raw", "heuristic"}))
        ->capture_default_str();
    add_train_options(cmp_cmd, cmp_o.cfg, cmp_o.activation, false);
    add_data_options(cmp_cmd, cmp_o.data, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (train_cmd->parsed()) return cmd_train(train_o);
        if (prune_cmd->parsed()) return cmd_prune(prune_o);
        if (cutoff_cmd->parsed()) return cmd_cutoff(cutoff_o);
        if (eval_cmd->parsed()) return cmd_eval(eval_o);
        if (cmp_cmd->parsed()) return cmd_compare(cmp_o);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\nRun with --help for usage.\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}
