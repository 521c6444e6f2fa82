#include "cdce/config.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "cdce/errors.hpp"

namespace cdce {

EnergyParams ExperimentConfig::energy(Granularity g) const {
  EnergyParams p;
  p.lambda = dataset.lambda;
  p.tau = dataset.tau;
  p.wx = dataset.wx;
  p.wy = dataset.wy;
  p.granularity = g;
  p.block = g == Granularity::Block ? dataset.block : 1;
  return p;
}

void ExperimentConfig::validate() const {
  if (rates.empty()) throw ConfigError("config: rates must be non-empty");
  for (double r : rates)
    if (!(r > 0.0 && r <= 1.0)) throw ConfigError("config: rates must lie in (0, 1]");
  if (seeds.empty()) throw ConfigError("config: seeds must be non-empty");
  for (int b : quantize_bits)
    if (b != 0 && (b < 2 || b > 16)) throw ConfigError("config: quantize_bits must be 0 or in [2,16]");
  for (const std::string& p : {dataset.left, dataset.right, dataset.gt})
    if (!p.empty() && !std::filesystem::exists(p))
      throw ConfigError("config: referenced file does not exist: " + p);
  recon.validate();
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

template <typename T, typename F>
std::vector<T> parse_list(const std::string& s, F parse_one) {
  std::vector<T> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    tok = trim(tok);
    if (!tok.empty()) out.push_back(parse_one(tok));
  }
  return out;
}

template <typename T>
std::string join_list(const std::vector<T>& v) {
  std::ostringstream os;
  for (size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  return os.str();
}

}  // namespace

ExperimentConfig config_from_text(const std::string& text, const std::string& origin) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError(origin + ":" + std::to_string(line_no) + ": expected key = value");
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }

  ExperimentConfig c;
  bool seen_rates = false, seen_seeds = false;
  auto take = [&kv, &seen_rates, &seen_seeds](const std::string& key) -> std::string {
    const auto it = kv.find(key);
    if (it == kv.end()) return "";
    if (key == "rates") seen_rates = true;
    if (key == "seeds") seen_seeds = true;
    std::string v = it->second;
    kv.erase(it);
    return v;
  };
  auto set_int = [&](const std::string& key, int& dst) {
    const std::string v = take(key);
    if (!v.empty()) dst = std::stoi(v);
  };
  auto set_double = [&](const std::string& key, double& dst) {
    const std::string v = take(key);
    if (!v.empty()) dst = std::stod(v);
  };
  auto set_string = [&](const std::string& key, std::string& dst) {
    const std::string v = take(key);
    if (!v.empty()) dst = v;
  };
  auto set_bool = [&](const std::string& key, bool& dst) {
    const std::string v = take(key);
    if (v.empty()) return;
    if (v != "0" && v != "1" && v != "true" && v != "false")
      throw ConfigError("config: boolean key " + key + " must be 0/1/true/false");
    dst = v == "1" || v == "true";
  };

  set_string("name", c.dataset.name);
  std::string mode = take("mode");
  if (!mode.empty()) {
    if (mode != "stereo" && mode != "flow") throw ConfigError("config: mode must be stereo|flow");
    c.dataset.stereo = mode == "stereo";
  }
  set_string("left", c.dataset.left);
  set_string("right", c.dataset.right);
  set_string("gt", c.dataset.gt);
  set_int("gt_scale", c.dataset.gt_scale);
  set_int("wx", c.dataset.wx);
  set_int("wy", c.dataset.wy);
  set_int("block", c.dataset.block);
  set_double("lambda", c.dataset.lambda);
  set_double("tau", c.dataset.tau);
  if (const std::string v = take("synth_seed"); !v.empty()) c.dataset.synth_seed = std::stoull(v);

  if (const std::string v = take("rates"); seen_rates)
    c.rates = parse_list<double>(v, [](const std::string& s) { return std::stod(s); });
  if (const std::string v = take("seeds"); seen_seeds)
    c.seeds = parse_list<std::uint64_t>(v, [](const std::string& s) { return std::stoull(s); });
  if (const std::string v = take("kind"); !v.empty()) c.kind = kind_from_name(v);
  set_bool("same_matrix", c.same_matrix);
  if (const std::string v = take("quantize_bits"); !v.empty())
    c.quantize_bits = parse_list<int>(v, [](const std::string& s) { return std::stoi(s); });

  set_double("epsilon", c.recon.epsilon);
  set_double("recon_gamma", c.recon.gamma);
  set_double("recon_gamma_decay", c.recon.gamma_decay);
  set_int("recon_decay_every", c.recon.decay_every);
  set_int("recon_iters", c.recon.max_iters);
  set_double("recon_tol", c.recon.rel_tol);
  if (const std::string v = take("wavelet"); !v.empty()) c.recon.family = wavelet_from_name(v);
  set_int("levels", c.recon.levels);

  set_string("out", c.out_dir);
  set_int("threads", c.threads);
  set_int("max_sweeps", c.max_sweeps);

  if (!kv.empty()) throw ConfigError("config: unknown key: " + kv.begin()->first);
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_text(ss.str(), path);
}

std::string ExperimentConfig::dump() const {
  std::ostringstream os;
  os << "name = " << dataset.name << "\n";
  os << "mode = " << (dataset.stereo ? "stereo" : "flow") << "\n";
  os << "left = " << dataset.left << "\n";
  os << "right = " << dataset.right << "\n";
  os << "gt = " << dataset.gt << "\n";
  os << "gt_scale = " << dataset.gt_scale << "\n";
  os << "wx = " << dataset.wx << "\n";
  os << "wy = " << dataset.wy << "\n";
  os << "block = " << dataset.block << "\n";
  os << "lambda = " << dataset.lambda << "\n";
  os << "tau = " << dataset.tau << "\n";
  os << "synth_seed = " << dataset.synth_seed << "\n";
  os << "rates = " << join_list(rates) << "\n";
  os << "seeds = " << join_list(seeds) << "\n";
  os << "kind = " << kind_name(kind) << "\n";
  os << "same_matrix = " << (same_matrix ? 1 : 0) << "\n";
  os << "quantize_bits = " << join_list(quantize_bits) << "\n";
  os << "epsilon = " << recon.epsilon << "\n";
  os << "recon_gamma = " << recon.gamma << "\n";
  os << "recon_gamma_decay = " << recon.gamma_decay << "\n";
  os << "recon_decay_every = " << recon.decay_every << "\n";
  os << "recon_iters = " << recon.max_iters << "\n";
  os << "recon_tol = " << recon.rel_tol << "\n";
  os << "wavelet = " << (recon.family == WaveletFamily::Haar ? "haar" : "db4") << "\n";
  os << "levels = " << recon.levels << "\n";
  os << "out = " << out_dir << "\n";
  os << "threads = " << threads << "\n";
  os << "max_sweeps = " << max_sweeps << "\n";
  return os.str();
}

}  // namespace cdce
