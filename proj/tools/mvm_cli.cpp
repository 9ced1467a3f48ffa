// mvm: command-line front end for training, prediction, evaluation,
// gradient checking and synthetic data generation.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mvm/mvm.hpp"

namespace {

using namespace mvm;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + path + "'");
    out << text;
    if (!out.flush()) throw Error("cannot write '" + path + "'");
}

void emit(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
    } else {
        write_file(path, text);
    }
}

/// True when the text holds nothing but blank lines and comments.
bool no_content(std::string_view text) {
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        auto line = text.substr(pos, end - pos);
        line = detail::trim(line.substr(0, line.find('#')));
        if (!line.empty()) return false;
        pos = end + 1;
    }
    return true;
}

Dataset load_dataset(const std::string& path) { return parse_dataset(read_file(path)); }

std::vector<double> parse_real_list(const std::string& text, const std::string& what) {
    std::vector<double> out;
    std::string_view rest = text;
    while (true) {
        const auto comma = rest.find(',');
        const auto tok = detail::trim(rest.substr(0, comma));
        double x = 0.0;
        if (!detail::parse_real(tok, x)) {
            throw ConfigError("invalid " + what + " entry '" + std::string(tok) + "'");
        }
        out.push_back(x);
        if (comma == std::string_view::npos) break;
        rest = rest.substr(comma + 1);
    }
    return out;
}

void check_schema(const ViewSchema& model, const ViewSchema& data) {
    if (model == data) return;
    auto show = [](const ViewSchema& s) {
        std::string out;
        for (std::size_t d : s.dims()) out += (out.empty() ? "" : ",") + std::to_string(d);
        return out;
    };
    throw SchemaError("data schema (" + show(data) + ") does not match model schema (" +
                      show(model) + ")");
}

/// Options shared by train and gradcheck.
struct ObjectiveOptions {
    std::size_t k = 8;
    std::string loss = "logit";
    std::string reg = "l2";
    double epsilon = 1e-6;
    double lambda = 1e-4;
    std::uint64_t seed = 42;
    bool no_augment = false;

    void add(CLI::App& app) {
        app.add_option("--k", k, "rank")->capture_default_str();
        app.add_option("--loss", loss, "square|logit|hinge")
            ->check(CLI::IsMember({"square", "logit", "hinge"}))
            ->capture_default_str();
        app.add_option("--reg", reg, "l2|l1 (smoothed)")
            ->check(CLI::IsMember({"l2", "l1"}))
            ->capture_default_str();
        app.add_option("--epsilon", epsilon, "smoothing of the L1 penalty")->capture_default_str();
        app.add_option("--lambda", lambda, "regularization weight")->capture_default_str();
        app.add_option("--seed", seed, "random seed")->capture_default_str();
        app.add_flag("--no-augment", no_augment, "drop the bias rows");
    }

    void apply(TrainConfig& c) const {
        c.k = k;
        c.loss = *parse_loss_kind(loss);
        c.reg = reg == "l1" ? Regularizer::l1(epsilon) : Regularizer::l2();
        c.lambda = lambda;
        c.seed = seed;
        c.augment = !no_augment;
    }
};

struct TrainOptions {
    ObjectiveOptions obj;
    std::string data, model_out, valid, lambda_grid, baseline;
    double eta = 0.05, eta_decay = 0.0, sigma = 0.01, tol = 1e-6;
    std::size_t epochs = 20;
    bool no_shuffle = false;
};

void print_report(const TrainReport& r) {
    std::cout << "epoch\t0\t" << format_double(r.initial_objective) << '\n';
    for (std::size_t e = 0; e < r.objective_trace.size(); ++e) {
        std::cout << "epoch\t" << e + 1 << '\t' << format_double(r.objective_trace[e]) << '\n';
    }
    std::cout << "final_objective\t" << format_double(r.final_objective) << '\n'
              << "converged\t" << (r.converged ? "true" : "false") << '\n'
              << "updates\t" << r.updates << '\n';
}

int run_train(const TrainOptions& o) {
    TrainConfig config;
    o.obj.apply(config);
    config.eta = o.eta;
    config.eta_decay = o.eta_decay;
    config.sigma = o.sigma;
    config.epochs = o.epochs;
    config.tol = o.tol;
    config.shuffle = !o.no_shuffle;
    config.validate();

    const Dataset data = load_dataset(o.data);
    std::optional<BaselineKind> baseline;
    if (o.baseline == "linear") baseline = BaselineKind::linear;
    if (o.baseline == "mvfm") baseline = BaselineKind::mvfm;

    if (!o.lambda_grid.empty()) {
        if (o.valid.empty()) throw ConfigError("--lambda-grid requires --valid");
        const Dataset valid = load_dataset(o.valid);
        check_schema(data.schema(), valid.schema());
        const auto grid = parse_real_list(o.lambda_grid, "lambda grid");
        LambdaSelection sel;
        if (baseline) {
            sel = select_lambda_with(valid, config, grid, [&](const TrainConfig& c) {
                auto fitted = baseline_train(*baseline, data, c);
                return [m = std::move(fitted.model)](const MultiViewInstance& x) {
                    return baseline_predict(m, x);
                };
            });
        } else {
            sel = select_lambda(data, valid, config, grid);
        }
        for (const auto& [lambda, score] : sel.scores) {
            std::cout << "lambda\t" << format_double(lambda) << '\t' << format_double(score) << '\n';
        }
        std::cout << "selected_lambda\t" << format_double(sel.best_lambda) << '\n';
        config.lambda = sel.best_lambda;
    }

    AnyModel model = MvmModel(data.schema(), 1);
    if (baseline) {
        auto r = baseline_train(*baseline, data, config);
        print_report(r.report);
        model = std::visit([](auto&& m) -> AnyModel { return m; }, std::move(r.model));
    } else {
        auto r = train(data, config);
        print_report(r.report);
        model = std::move(r.model);
    }
    if (!o.valid.empty() && o.lambda_grid.empty()) {
        const Dataset valid = load_dataset(o.valid);
        check_schema(data.schema(), valid.schema());
        const double v = mean_loss(valid, config.loss, [&](const MultiViewInstance& x) {
            return predict_any(model, x);
        });
        std::cout << "valid_loss\t" << format_double(v) << '\n';
    }
    write_file(o.model_out, serialize_model(model));
    return 0;
}

int run_predict(const std::string& model_path, const std::string& data_path,
                const std::string& out_path) {
    const AnyModel model = deserialize_model(read_file(model_path));
    const std::string text = read_file(data_path);
    std::string out;
    if (!no_content(text)) {
        const Dataset data = parse_dataset(text);
        check_schema(model_schema(model), data.schema());
        for (const auto& x : data.instances()) {
            out += format_double(predict_any(model, x));
            out += '\n';
        }
    }
    emit(out_path, out);
    return 0;
}

int run_eval(const std::string& model_path, const std::string& data_path,
             const std::string& metrics) {
    const AnyModel model = deserialize_model(read_file(model_path));
    const Dataset data = load_dataset(data_path);
    check_schema(model_schema(model), data.schema());
    std::vector<double> scores;
    scores.reserve(data.size());
    for (const auto& x : data.instances()) scores.push_back(predict_any(model, x));
    const auto labels = data.labels();

    std::string line;
    std::string_view rest = metrics;
    while (true) {
        const auto comma = rest.find(',');
        const std::string name(detail::trim(rest.substr(0, comma)));
        double value = 0.0;
        if (name == "acc") {
            value = accuracy(scores, labels);
        } else if (name == "auc") {
            value = auc(scores, labels);
        } else if (name == "logloss") {
            value = mean_logloss(scores, labels);
        } else if (name == "rmse") {
            value = rmse(scores, labels);
        } else {
            throw ConfigError("unknown metric '" + name + "' (expected acc, auc, logloss, rmse)");
        }
        line += (line.empty() ? "" : "\t") + name + "\t" + format_double(value);
        if (comma == std::string_view::npos) break;
        rest = rest.substr(comma + 1);
    }
    std::cout << line << '\n';
    return 0;
}

ViewSchema schema_from(std::size_t m, const std::string& dims, std::size_t default_dim) {
    if (dims.empty()) {
        if (m == 0) throw ConfigError("one of --m or --dims is required");
        return ViewSchema(std::vector<std::size_t>(m, default_dim));
    }
    ViewSchema s = parse_schema_dims(dims);
    if (m != 0 && s.num_views() != m) {
        throw ConfigError("--m " + std::to_string(m) + " disagrees with --dims (" +
                          std::to_string(s.num_views()) + " views)");
    }
    return s;
}

constexpr double kGradCheckThreshold = 1e-5;

int run_gradcheck(const ObjectiveOptions& obj, std::size_t m, const std::string& dims,
                  std::size_t trials) {
    TrainConfig config;
    obj.apply(config);
    const auto r = grad_check(schema_from(m, dims, 3), config, trials);
    std::cout << "max_relative_error\t" << format_double(r.max_relative_error) << '\n'
              << "coordinates\t" << r.coordinates_checked << '\n';
    if (r.max_relative_error > kGradCheckThreshold) {
        std::cerr << "mvm: error: gradient check failed (max relative error "
                  << format_double(r.max_relative_error) << " > " << format_double(kGradCheckThreshold)
                  << ")\n";
        return 1;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-view machines: train, predict, evaluate"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "expand all help");

    TrainOptions tr;
    auto* train_cmd = app.add_subcommand("train", "fit a model with SGD");
    tr.obj.add(*train_cmd);
    train_cmd->add_option("--data", tr.data, "training data")->required();
    train_cmd->add_option("--model-out", tr.model_out, "model file to write")->required();
    train_cmd->add_option("--eta", tr.eta, "learning rate")->capture_default_str();
    train_cmd->add_option("--eta-decay", tr.eta_decay, "eta_t = eta / (1 + decay * t)")
        ->capture_default_str();
    train_cmd->add_option("--sigma", tr.sigma, "init standard deviation")->capture_default_str();
    train_cmd->add_option("--epochs", tr.epochs, "maximum epochs")->capture_default_str();
    train_cmd->add_option("--tol", tr.tol, "relative objective change to stop at")
        ->capture_default_str();
    train_cmd->add_flag("--no-shuffle", tr.no_shuffle, "visit instances in file order");
    train_cmd->add_option("--baseline", tr.baseline, "train a baseline instead")
        ->check(CLI::IsMember({"linear", "mvfm"}));
    train_cmd->add_option("--valid", tr.valid, "validation data");
    train_cmd->add_option("--lambda-grid", tr.lambda_grid, "comma-separated lambdas to select from");

    std::string model_path, data_path, out_path, metrics = "acc";
    auto* predict_cmd = app.add_subcommand("predict", "score instances, one per line");
    predict_cmd->add_option("--model", model_path, "model file")->required();
    predict_cmd->add_option("--data", data_path, "data file")->required();
    predict_cmd->add_option("--out", out_path, "output file (default stdout)");

    auto* eval_cmd = app.add_subcommand("eval", "evaluate a model on labelled data");
    eval_cmd->add_option("--model", model_path, "model file")->required();
    eval_cmd->add_option("--data", data_path, "data file")->required();
    eval_cmd->add_option("--metrics", metrics, "comma-separated: acc,auc,logloss,rmse")
        ->capture_default_str();

    ObjectiveOptions gc;
    std::size_t gc_m = 0, trials = 20;
    std::string gc_dims;
    auto* grad_cmd = app.add_subcommand("gradcheck", "compare gradients with finite differences");
    gc.add(*grad_cmd);
    grad_cmd->add_option("--m", gc_m, "number of views");
    grad_cmd->add_option("--dims", gc_dims, "view dimensions, e.g. 4,3,5");
    grad_cmd->add_option("--trials", trials, "coordinates to check")->capture_default_str();

    std::size_t sy_m = 0, sy_k = 2, sy_n = 1000;
    std::string sy_dims, sy_out, sy_teacher;
    double density = 0.3, noise = 0.0;
    std::uint64_t sy_seed = 42;
    auto* synth_cmd = app.add_subcommand("synth", "generate a planted dataset");
    synth_cmd->add_option("--m", sy_m, "number of views");
    synth_cmd->add_option("--dims", sy_dims, "view dimensions, e.g. 4,3,5");
    synth_cmd->add_option("--k", sy_k, "teacher rank")->capture_default_str();
    synth_cmd->add_option("--n", sy_n, "instances")->capture_default_str();
    synth_cmd->add_option("--density", density, "feature keep probability")->capture_default_str();
    synth_cmd->add_option("--noise", noise, "label flip probability")->capture_default_str();
    synth_cmd->add_option("--seed", sy_seed, "random seed")->capture_default_str();
    synth_cmd->add_option("--out", sy_out, "data file to write")->required();
    synth_cmd->add_option("--teacher-out", sy_teacher, "teacher model file to write");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "mvm: error: " << e.what() << '\n';
        return 2;
    }

    try {
        if (*train_cmd) return run_train(tr);
        if (*predict_cmd) return run_predict(model_path, data_path, out_path);
        if (*eval_cmd) return run_eval(model_path, data_path, metrics);
        if (*grad_cmd) return run_gradcheck(gc, gc_m, gc_dims, trials);
        if (*synth_cmd) {
            const auto r = synth_generate(schema_from(sy_m, sy_dims, 10), sy_k, sy_n, density, noise,
                                          sy_seed);
            write_file(sy_out, write_dataset(r.data));
            if (!sy_teacher.empty()) write_file(sy_teacher, serialize_model(r.teacher));
            return 0;
        }
    } catch (const std::exception& e) {
        std::string msg = e.what();
        for (char& c : msg) {
            if (c == '\n') c = ' ';
        }
        std::cerr << "mvm: error: " << msg << '\n';
        return 1;
    }
    return 1;
}
