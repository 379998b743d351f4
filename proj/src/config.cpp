#include "coordmotion/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace coordmotion {

Similarity similarity_from_string(const std::string& name) {
    if (name == "cosine") return Similarity::Cosine;
    if (name == "softmax") return Similarity::SoftmaxDot;
    throw std::invalid_argument("unknown similarity '" + name + "' (expected cosine|softmax)");
}

std::string to_string(Similarity s) {
    return s == Similarity::Cosine ? "cosine" : "softmax";
}

void ModelConfig::validate() const {
    if (joints < 2) throw std::invalid_argument("config: joints must be >= 2");
    if (feature_dim < 1 || trajectory_dim < 1) {
        throw std::invalid_argument("config: feature_dim and trajectory_dim must be >= 1");
    }
    if (observed_frames < 2) throw std::invalid_argument("config: observed_frames must be >= 2");
    if (predicted_frames < 1) throw std::invalid_argument("config: predicted_frames must be >= 1");
    if (timescales.empty()) throw std::invalid_argument("config: timescales must be non-empty");
    for (int k : timescales) {
        if (k < 1 || k % 2 == 0) {
            throw std::invalid_argument("config: timescales must be odd and positive, got " +
                                        std::to_string(k));
        }
    }
    if (block_count < 1) throw std::invalid_argument("config: block_count must be >= 1");
    for (auto [src, dst] : laterals) {
        if (src < 1 || dst < 1 || src >= dst || dst > block_count) {
            throw std::invalid_argument(
                "config: lateral pair (" + std::to_string(src) + "," + std::to_string(dst) +
                ") must satisfy 1 <= src < dst <= blocks=" + std::to_string(block_count));
        }
    }
    if (!use_gce && !use_lie) {
        throw std::invalid_argument("config: at least one of use_gce/use_lie must be enabled");
    }
    if (use_affm) {
        const int width = stream_count() * trajectory_dim;
        if (affm_reduction < 1 || width % affm_reduction != 0) {
            throw std::invalid_argument("config: gate width " + std::to_string(width) +
                                        " must be divisible by affm_reduction=" +
                                        std::to_string(affm_reduction));
        }
    }
}

void TrainConfig::validate() const {
    if (lr0 <= 0.0 || lr_decay <= 0.0 || lr_floor <= 0.0) {
        throw std::invalid_argument("train config: rates must be positive");
    }
    if (lr_floor_epoch < 0) throw std::invalid_argument("train config: lr_floor_epoch must be >= 0");
    if (batch < 1) throw std::invalid_argument("train config: batch must be >= 1");
    if (epochs < 1) throw std::invalid_argument("train config: epochs must be >= 1");
    if (grad_clip < 0.0) throw std::invalid_argument("train config: grad_clip must be >= 0");
}

namespace {

bool parse_bool(const std::string& v, const std::string& key) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw std::invalid_argument("config: bad boolean for " + key + ": '" + v + "'");
}

std::vector<int> parse_int_list(const std::string& v) {
    std::vector<int> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(std::stoi(item));
    }
    return out;
}

std::vector<std::pair<int, int>> parse_laterals(const std::string& v) {
    std::vector<std::pair<int, int>> out;
    if (v == "none") return out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        auto dash = item.find('-');
        if (dash == std::string::npos) {
            throw std::invalid_argument("config: lateral pair '" + item + "' must look like 1-9");
        }
        out.emplace_back(std::stoi(item.substr(0, dash)), std::stoi(item.substr(dash + 1)));
    }
    return out;
}

} // namespace

FileConfig parse_config_text(const std::string& text) {
    FileConfig cfg;
    bool train_seed_set = false;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        auto last = line.find_last_not_of(" \t\r");
        line = line.substr(first, last - first + 1);
        auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument("config line " + std::to_string(line_no) +
                                        ": expected key=value, got '" + line + "'");
        }
        const std::string key = line.substr(0, eq);
        const std::string value = line.substr(eq + 1);
        ModelConfig& m = cfg.model;
        TrainConfig& t = cfg.train;
        try {
            if (key == "joints") m.joints = std::stoi(value);
            else if (key == "feature_dim") m.feature_dim = std::stoi(value);
            else if (key == "trajectory_dim") m.trajectory_dim = std::stoi(value);
            else if (key == "observed_frames") m.observed_frames = std::stoi(value);
            else if (key == "predicted_frames") m.predicted_frames = std::stoi(value);
            else if (key == "timescales") m.timescales = parse_int_list(value);
            else if (key == "blocks") m.block_count = std::stoi(value);
            else if (key == "laterals") m.laterals = parse_laterals(value);
            else if (key == "activation") m.act = activation_from_string(value);
            else if (key == "use_gce") m.use_gce = parse_bool(value, key);
            else if (key == "use_lie") m.use_lie = parse_bool(value, key);
            else if (key == "use_affm") m.use_affm = parse_bool(value, key);
            else if (key == "use_relative_joints") m.use_relative_joints = parse_bool(value, key);
            else if (key == "multi_graph") m.multi_graph = parse_bool(value, key);
            else if (key == "similarity") m.similarity = similarity_from_string(value);
            else if (key == "serial_mode") m.serial_mode = parse_bool(value, key);
            else if (key == "residual_output") m.residual_output = parse_bool(value, key);
            else if (key == "affm_reduction") m.affm_reduction = std::stoi(value);
            else if (key == "seed") {
                m.seed = std::stoull(value);
                if (!train_seed_set) t.seed = m.seed;
            } else if (key == "lr0") t.lr0 = std::stod(value);
            else if (key == "lr_decay") t.lr_decay = std::stod(value);
            else if (key == "lr_floor_epoch") t.lr_floor_epoch = std::stoi(value);
            else if (key == "lr_floor") t.lr_floor = std::stod(value);
            else if (key == "batch") t.batch = std::stoi(value);
            else if (key == "epochs") t.epochs = std::stoi(value);
            else if (key == "train_seed") {
                t.seed = std::stoull(value);
                train_seed_set = true;
            } else if (key == "grad_clip") t.grad_clip = std::stod(value);
            else {
                throw std::invalid_argument("config line " + std::to_string(line_no) +
                                            ": unknown key '" + key + "'");
            }
        } catch (const std::invalid_argument&) {
            throw;
        } catch (const std::exception&) {
            throw std::invalid_argument("config line " + std::to_string(line_no) +
                                        ": bad value for '" + key + "': '" + value + "'");
        }
    }
    return cfg;
}

FileConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

std::string config_to_text(const FileConfig& cfg) {
    const ModelConfig& m = cfg.model;
    const TrainConfig& t = cfg.train;
    std::ostringstream os;
    os << "joints=" << m.joints << "\n";
    os << "feature_dim=" << m.feature_dim << "\n";
    os << "trajectory_dim=" << m.trajectory_dim << "\n";
    os << "observed_frames=" << m.observed_frames << "\n";
    os << "predicted_frames=" << m.predicted_frames << "\n";
    os << "timescales=";
    for (size_t i = 0; i < m.timescales.size(); ++i) os << (i ? "," : "") << m.timescales[i];
    os << "\n";
    os << "blocks=" << m.block_count << "\n";
    os << "laterals=";
    if (m.laterals.empty()) os << "none";
    for (size_t i = 0; i < m.laterals.size(); ++i) {
        os << (i ? "," : "") << m.laterals[i].first << "-" << m.laterals[i].second;
    }
    os << "\n";
    os << "activation=" << to_string(m.act) << "\n";
    os << "use_gce=" << (m.use_gce ? "true" : "false") << "\n";
    os << "use_lie=" << (m.use_lie ? "true" : "false") << "\n";
    os << "use_affm=" << (m.use_affm ? "true" : "false") << "\n";
    os << "use_relative_joints=" << (m.use_relative_joints ? "true" : "false") << "\n";
    os << "multi_graph=" << (m.multi_graph ? "true" : "false") << "\n";
    os << "similarity=" << to_string(m.similarity) << "\n";
    os << "serial_mode=" << (m.serial_mode ? "true" : "false") << "\n";
    os << "residual_output=" << (m.residual_output ? "true" : "false") << "\n";
    os << "affm_reduction=" << m.affm_reduction << "\n";
    os << "seed=" << m.seed << "\n";
    os << "lr0=" << t.lr0 << "\n";
    os << "lr_decay=" << t.lr_decay << "\n";
    os << "lr_floor_epoch=" << t.lr_floor_epoch << "\n";
    os << "lr_floor=" << t.lr_floor << "\n";
    os << "batch=" << t.batch << "\n";
    os << "epochs=" << t.epochs << "\n";
    os << "train_seed=" << t.seed << "\n";
    os << "grad_clip=" << t.grad_clip << "\n";
    return os.str();
}

} // namespace coordmotion
