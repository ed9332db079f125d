#include "todsec/ml/model_io.hpp"

#include <fstream>

#include <json.hpp>

namespace todsec::ml {

namespace {

constexpr int kFormatVersion = 1;

nlohmann::ordered_json vec_to_json(const Eigen::VectorXd& v) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
    return arr;
}

Eigen::VectorXd vec_from_json(const nlohmann::json& arr, const char* what) {
    if (!arr.is_array()) throw std::runtime_error(std::string(what) + " must be an array");
    Eigen::VectorXd v(arr.size());
    Eigen::Index i = 0;
    for (const auto& x : arr) {
        if (!x.is_number()) throw std::runtime_error(std::string(what) + " must hold numbers");
        v[i++] = x.get<double>();
    }
    return v;
}

nlohmann::ordered_json norm_to_json(const Standardizer& norm) {
    return {{"mean", vec_to_json(norm.mean)}, {"stddev", vec_to_json(norm.stddev)}};
}

Standardizer norm_from_json(const nlohmann::json& j) {
    Standardizer norm;
    norm.mean = vec_from_json(j.at("mean"), "norm.mean");
    norm.stddev = vec_from_json(j.at("stddev"), "norm.stddev");
    if (norm.mean.size() != norm.stddev.size()) {
        throw std::runtime_error("norm mean/stddev length mismatch");
    }
    for (Eigen::Index i = 0; i < norm.stddev.size(); ++i) {
        if (!(norm.stddev[i] > 0.0)) {
            throw std::runtime_error("norm stddev entries must be positive");
        }
    }
    return norm;
}

}  // namespace

void save_model(const TrainedModel& model, const std::filesystem::path& path) {
    nlohmann::ordered_json j;
    j["format_version"] = kFormatVersion;
    j["kind"] = to_string(model.kind);
    j["config_digest"] = model.digest;

    nlohmann::ordered_json history = nlohmann::ordered_json::array();
    for (const EpochLog& e : model.history) {
        history.push_back(
            {{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"val_loss", e.val_loss}});
    }
    j["history"] = std::move(history);

    if (model.kind == ModelKind::Tree) {
        if (!model.tree) throw std::runtime_error("tree model has no tree engine");
        nlohmann::ordered_json nodes = nlohmann::ordered_json::array();
        for (const TreeNode& n : model.tree->nodes) {
            nodes.push_back({{"feature", n.feature},
                             {"threshold", n.threshold},
                             {"left", n.left},
                             {"right", n.right},
                             {"counts", {n.counts[0], n.counts[1], n.counts[2]}}});
        }
        j["tree"] = {{"max_depth", model.tree->max_depth},
                     {"min_leaf", model.tree->min_leaf},
                     {"norm", norm_to_json(model.tree->norm)},
                     {"nodes", std::move(nodes)}};
    } else if (model.kind == ModelKind::LSTM) {
        if (!model.lstm) throw std::runtime_error("lstm model has no lstm engine");
        j["lstm"] = {{"input_dim", model.lstm->input_dim},
                     {"hidden", model.lstm->hidden},
                     {"readout_steps", model.lstm->readout_steps},
                     {"norm", norm_to_json(model.lstm->norm)},
                     {"theta", vec_to_json(model.lstm->theta)}};
    } else {
        if (!model.mlp) throw std::runtime_error("dense model has no dense engine");
        j["mlp"] = {{"layer_dims", model.mlp->layer_dims},
                    {"downsample_steps", model.mlp->downsample_steps},
                    {"norm", norm_to_json(model.mlp->norm)},
                    {"theta", vec_to_json(model.mlp->theta)}};
    }

    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    out << j.dump(2) << "\n";
    if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

TrainedModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("malformed model file '" + path.string() + "': " + e.what());
    }

    TrainedModel model;
    try {
        if (j.at("format_version").get<int>() != kFormatVersion) {
            throw std::runtime_error("unsupported model format version");
        }
        model.kind = model_kind_from_string(j.at("kind").get<std::string>());
        model.digest = j.value("config_digest", std::string());
        for (const auto& e : j.value("history", nlohmann::json::array())) {
            model.history.push_back({e.at("epoch").get<int>(), e.at("train_loss").get<double>(),
                                     e.at("val_loss").get<double>()});
        }

        if (model.kind == ModelKind::Tree) {
            const auto& t = j.at("tree");
            TreeModel tree;
            tree.max_depth = t.at("max_depth").get<int>();
            tree.min_leaf = t.at("min_leaf").get<int>();
            tree.norm = norm_from_json(t.at("norm"));
            const auto& nodes = t.at("nodes");
            if (!nodes.is_array() || nodes.empty()) {
                throw std::runtime_error("tree model needs at least one node");
            }
            const auto n_nodes = static_cast<int>(nodes.size());
            for (const auto& nj : nodes) {
                TreeNode n;
                n.feature = nj.at("feature").get<int>();
                n.threshold = nj.at("threshold").get<double>();
                n.left = nj.at("left").get<int>();
                n.right = nj.at("right").get<int>();
                const auto& counts = nj.at("counts");
                if (!counts.is_array() || counts.size() != 3) {
                    throw std::runtime_error("tree node counts must hold three numbers");
                }
                for (int c = 0; c < 3; ++c) n.counts[c] = counts[c].get<double>();
                if (!n.is_leaf() &&
                    (n.left < 0 || n.left >= n_nodes || n.right < 0 || n.right >= n_nodes)) {
                    throw std::runtime_error("tree node child index out of range");
                }
                tree.nodes.push_back(n);
            }
            model.tree = std::move(tree);
        } else if (model.kind == ModelKind::LSTM) {
            const auto& l = j.at("lstm");
            LstmModel lstm;
            lstm.input_dim = l.at("input_dim").get<int>();
            lstm.hidden = l.at("hidden").get<int>();
            lstm.readout_steps = l.at("readout_steps").get<int>();
            if (lstm.input_dim < 1 || lstm.hidden < 1 || lstm.readout_steps < 1) {
                throw std::runtime_error("lstm dimensions must be positive");
            }
            lstm.norm = norm_from_json(l.at("norm"));
            lstm.theta = vec_from_json(l.at("theta"), "lstm.theta");
            if (lstm.theta.size() != lstm.param_count()) {
                throw std::runtime_error("lstm parameter vector has the wrong length");
            }
            if (lstm.norm.channels() != lstm.input_dim) {
                throw std::runtime_error("lstm norm statistics do not match input_dim");
            }
            model.lstm = std::move(lstm);
        } else {
            const auto& m = j.at("mlp");
            MlpModel mlp;
            mlp.layer_dims = m.at("layer_dims").get<std::vector<int>>();
            mlp.downsample_steps = m.at("downsample_steps").get<int>();
            if (mlp.layer_dims.size() < 2 || mlp.layer_dims.back() != 3 ||
                mlp.downsample_steps < 1) {
                throw std::runtime_error("dense model layout is invalid");
            }
            for (int d : mlp.layer_dims) {
                if (d < 1) throw std::runtime_error("dense model layout is invalid");
            }
            if (mlp.layer_dims != [&] {
                    std::vector<int> want{mlp.layer_dims.front()};
                    for (int h : hidden_dims_for(model.kind)) want.push_back(h);
                    want.push_back(3);
                    return want;
                }()) {
                throw std::runtime_error("dense model layer sizes do not match its kind");
            }
            mlp.norm = norm_from_json(m.at("norm"));
            mlp.theta = vec_from_json(m.at("theta"), "mlp.theta");
            if (mlp.theta.size() != mlp.param_count()) {
                throw std::runtime_error("dense parameter vector has the wrong length");
            }
            if (mlp.layer_dims.front() !=
                mlp.downsample_steps * static_cast<int>(mlp.norm.channels())) {
                throw std::runtime_error("dense input size does not match norm statistics");
            }
            model.mlp = std::move(mlp);
        }
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("model file '" + path.string() +
                                 "' is missing fields: " + e.what());
    }
    return model;
}

}  // namespace todsec::ml
