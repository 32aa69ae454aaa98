#include "baypod/config.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "baypod/heat_fom.hpp"

namespace baypod {

namespace {

std::string format_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

std::vector<std::string> split_csv(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else if (!std::isspace(static_cast<unsigned char>(c))) {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

}  // namespace

void ExperimentConfig::validate() const {
    auto require = [](bool ok, const char* what) {
        if (!ok) throw std::invalid_argument(std::string("ExperimentConfig: ") + what);
    };
    require(n_x >= 2, "n_x must be >= 2");
    require(n_T >= 2, "n_T must be >= 2");
    require(length > 0, "length must be > 0");
    require(n_kappa >= 2, "n_kappa must be >= 2");
    require(kappa_max > kappa_min, "kappa range must be non-degenerate");
    require(n_pool > 0 && n_test > 0, "pool and test counts must be positive");
    require(n_pool + n_test == n_kappa, "pool/test split must sum to n_kappa");
    require(pod_dim >= 1, "pod_dim must be >= 1");
    require(n_train_times >= 1 && n_train_times <= n_T, "n_train_times out of range");
    require(n_test_low_times >= 1 && n_test_low_times <= n_T, "n_test_low_times out of range");
    require(n_test_high_times >= 1 && n_test_high_times <= n_T, "n_test_high_times out of range");
    require(n_acq_high_times >= 1 && n_acq_high_times <= n_T, "n_acq_high_times out of range");
    require(n_iters >= 1, "n_iters must be >= 1");
    require(mc_samples >= 2, "mc_samples must be >= 2");
    require(substeps >= 1, "substeps must be >= 1");
    require(schedule.outer_rounds >= 1, "outer_rounds must be >= 1");
    require(schedule.nn_steps_per_round >= 1, "nn_steps_per_round must be >= 1");
    require(schedule.learning_rate > 0, "learning_rate must be > 0");
    require(n_ensemble >= 1, "n_ensemble must be >= 1");
    require(workers >= 1, "workers must be >= 1");
    require(!strategies.empty(), "at least one strategy required");
    require(!run_seeds.empty(), "at least one run seed required");
    for (const auto& s : strategies)
        require(s == "eal" || s == "ual" || s == "random", "unknown strategy name");
}

std::string serialize_config(const ExperimentConfig& c) {
    std::ostringstream os;
    os << "n_x=" << c.n_x << "\n";
    os << "n_T=" << c.n_T << "\n";
    os << "length=" << format_double(c.length) << "\n";
    os << "kappa_min=" << format_double(c.kappa_min) << "\n";
    os << "kappa_max=" << format_double(c.kappa_max) << "\n";
    os << "n_kappa=" << c.n_kappa << "\n";
    os << "n_pool=" << c.n_pool << "\n";
    os << "n_test=" << c.n_test << "\n";
    os << "pod_dim=" << c.pod_dim << "\n";
    os << "n_train_times=" << c.n_train_times << "\n";
    os << "n_test_low_times=" << c.n_test_low_times << "\n";
    os << "n_test_high_times=" << c.n_test_high_times << "\n";
    os << "n_acq_high_times=" << c.n_acq_high_times << "\n";
    os << "n_iters=" << c.n_iters << "\n";
    os << "strategies=";
    for (std::size_t i = 0; i < c.strategies.size(); ++i)
        os << (i ? "," : "") << c.strategies[i];
    os << "\n";
    os << "run_seeds=";
    for (std::size_t i = 0; i < c.run_seeds.size(); ++i) os << (i ? "," : "") << c.run_seeds[i];
    os << "\n";
    os << "suite_seed=" << c.suite_seed << "\n";
    os << "mc_samples=" << c.mc_samples << "\n";
    os << "outer_rounds=" << c.schedule.outer_rounds << "\n";
    os << "nn_steps_per_round=" << c.schedule.nn_steps_per_round << "\n";
    os << "learning_rate=" << format_double(c.schedule.learning_rate) << "\n";
    os << "adam_beta1=" << format_double(c.schedule.beta1) << "\n";
    os << "adam_beta2=" << format_double(c.schedule.beta2) << "\n";
    os << "adam_epsilon=" << format_double(c.schedule.epsilon) << "\n";
    os << "n_ensemble=" << c.n_ensemble << "\n";
    os << "substeps=" << c.substeps << "\n";
    os << "output_dir=" << c.output_dir << "\n";
    os << "cache_dir=" << c.cache_dir << "\n";
    os << "record_timings=" << (c.record_timings ? 1 : 0) << "\n";
    os << "workers=" << c.workers << "\n";
    return os.str();
}

ExperimentConfig parse_config(const std::string& text) {
    ExperimentConfig c;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        // trim
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        const auto last = line.find_last_not_of(" \t\r");
        line = line.substr(first, last - first + 1);
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": expected key=value");
        std::string key = line.substr(0, eq);
        std::string value = line.substr(eq + 1);
        auto trim = [](std::string& s) {
            const auto a = s.find_first_not_of(" \t");
            const auto b = s.find_last_not_of(" \t");
            s = a == std::string::npos ? "" : s.substr(a, b - a + 1);
        };
        trim(key);
        trim(value);

        if (key == "n_x") c.n_x = std::stoi(value);
        else if (key == "n_T") c.n_T = std::stoi(value);
        else if (key == "length") c.length = std::stod(value);
        else if (key == "kappa_min") c.kappa_min = std::stod(value);
        else if (key == "kappa_max") c.kappa_max = std::stod(value);
        else if (key == "n_kappa") c.n_kappa = std::stoi(value);
        else if (key == "n_pool") c.n_pool = std::stoi(value);
        else if (key == "n_test") c.n_test = std::stoi(value);
        else if (key == "pod_dim") c.pod_dim = std::stoi(value);
        else if (key == "n_train_times") c.n_train_times = std::stoi(value);
        else if (key == "n_test_low_times") c.n_test_low_times = std::stoi(value);
        else if (key == "n_test_high_times") c.n_test_high_times = std::stoi(value);
        else if (key == "n_acq_high_times") c.n_acq_high_times = std::stoi(value);
        else if (key == "n_iters") c.n_iters = std::stoi(value);
        else if (key == "strategies") c.strategies = split_csv(value);
        else if (key == "run_seeds") {
            c.run_seeds.clear();
            for (const auto& tok : split_csv(value)) c.run_seeds.push_back(std::stoull(tok));
        } else if (key == "suite_seed") c.suite_seed = std::stoull(value);
        else if (key == "mc_samples") c.mc_samples = std::stoi(value);
        else if (key == "outer_rounds") c.schedule.outer_rounds = std::stoi(value);
        else if (key == "nn_steps_per_round") c.schedule.nn_steps_per_round = std::stoi(value);
        else if (key == "learning_rate") c.schedule.learning_rate = std::stod(value);
        else if (key == "adam_beta1") c.schedule.beta1 = std::stod(value);
        else if (key == "adam_beta2") c.schedule.beta2 = std::stod(value);
        else if (key == "adam_epsilon") c.schedule.epsilon = std::stod(value);
        else if (key == "n_ensemble") c.n_ensemble = std::stoi(value);
        else if (key == "substeps") c.substeps = std::stoi(value);
        else if (key == "output_dir") c.output_dir = value;
        else if (key == "cache_dir") c.cache_dir = value;
        else if (key == "record_timings") c.record_timings = std::stoi(value) != 0;
        else if (key == "workers") c.workers = std::stoi(value);
        else throw std::invalid_argument("config line " + std::to_string(lineno) +
                                         ": unknown key '" + key + "'");
    }
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_config: cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::string config_hash(const ExperimentConfig& c) {
    const std::string s = serialize_config(c);
    return sha256_hex(s.data(), s.size());
}

}  // namespace baypod
