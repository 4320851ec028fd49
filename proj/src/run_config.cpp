#include "demvc/run_config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace demvc {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const char* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc{} || ptr != end) {
    throw UsageError("bad value for " + key + ": \"" + value + "\"");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "1" || value == "true" || value == "yes" || value == "on") return true;
  if (value == "0" || value == "false" || value == "no" || value == "off") return false;
  throw UsageError("bad value for " + key + ": \"" + value + "\" (expected true or false)");
}

template <typename T>
std::vector<T> parse_list(const std::string& key, const std::string& value) {
  std::vector<T> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number<T>(key, trim(item)));
  return out;
}

std::string format_double(double x) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

template <typename T>
std::string join(const std::vector<T>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i > 0) out += ',';
    out += std::to_string(xs[i]);
  }
  return out;
}

}  // namespace

ImageShape parse_image_shape(const std::string& text) {
  std::vector<std::size_t> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, 'x')) parts.push_back(parse_number<std::size_t>("image", item));
  if (parts.size() == 2) parts.push_back(1);
  if (parts.size() != 3 || parts[0] == 0 || parts[1] == 0 || parts[2] == 0) {
    throw UsageError("bad image shape \"" + text + "\" (expected HxW or HxWxC)");
  }
  return ImageShape{parts[0], parts[1], parts[2]};
}

void RunConfig::set(const std::string& key, const std::string& raw) {
  const std::string value = trim(raw);
  TrainConfig& t = train;
  if (key == "dataset") dataset = value;
  else if (key == "output") output = value;
  else if (key == "image") image = value.empty() ? std::nullopt : std::optional(parse_image_shape(value));
  else if (key == "metrics") metrics = parse_bool(key, value);
  else if (key == "dump_embeddings") dump_embeddings = parse_bool(key, value);
  else if (key == "seeds") seeds = parse_list<std::uint64_t>(key, value);
  else if (key == "gamma") t.gamma = parse_number<double>(key, value);
  else if (key == "batch_size") t.batch_size = parse_number<std::size_t>(key, value);
  else if (key == "batches_per_turn") t.batches_per_turn = parse_number<std::size_t>(key, value);
  else if (key == "total_finetune_iters") t.total_finetune_iters = parse_number<std::size_t>(key, value);
  else if (key == "pretrain_epochs") t.pretrain_epochs = parse_number<std::size_t>(key, value);
  else if (key == "n_clusters") t.n_clusters = parse_number<std::size_t>(key, value);
  else if (key == "first_referred_view") t.first_referred_view = parse_number<std::size_t>(key, value);
  else if (key == "mode") t.mode = parse_mode(value);
  else if (key == "seed") t.seed = parse_number<std::uint64_t>(key, value);
  else if (key == "consensus_threshold") t.consensus_threshold = parse_number<double>(key, value);
  else if (key == "hidden") t.hidden = value.empty() ? std::vector<std::size_t>{} : parse_list<std::size_t>(key, value);
  else if (key == "embed_dim") t.embed_dim = parse_number<std::size_t>(key, value);
  else if (key == "learning_rate") t.learning_rate = parse_number<double>(key, value);
  else if (key == "kmeans_restarts") t.kmeans_restarts = parse_number<std::size_t>(key, value);
  else if (key == "convolutional") t.convolutional = parse_bool(key, value);
  else if (key == "view_seeds") t.view_seeds = value.empty() ? std::vector<std::uint64_t>{} : parse_list<std::uint64_t>(key, value);
  else throw UsageError("unknown config key \"" + key + "\"");
}

std::string RunConfig::to_text() const {
  const TrainConfig& t = train;
  std::ostringstream out;
  out << "dataset = " << dataset.string() << '\n'
      << "output = " << output.string() << '\n'
      << "image = ";
  if (image) out << image->height << 'x' << image->width << 'x' << image->channels;
  out << '\n'
      << "metrics = " << (metrics ? "true" : "false") << '\n'
      << "dump_embeddings = " << (dump_embeddings ? "true" : "false") << '\n'
      << "seeds = " << join(seeds) << '\n'
      << "gamma = " << format_double(t.gamma) << '\n'
      << "batch_size = " << t.batch_size << '\n'
      << "batches_per_turn = " << t.batches_per_turn << '\n'
      << "total_finetune_iters = " << t.total_finetune_iters << '\n'
      << "pretrain_epochs = " << t.pretrain_epochs << '\n'
      << "n_clusters = " << t.n_clusters << '\n'
      << "first_referred_view = " << t.first_referred_view << '\n'
      << "mode = " << to_string(t.mode) << '\n'
      << "seed = " << t.seed << '\n'
      << "consensus_threshold = " << format_double(t.consensus_threshold) << '\n'
      << "hidden = " << join(t.hidden) << '\n'
      << "embed_dim = " << t.embed_dim << '\n'
      << "learning_rate = " << format_double(t.learning_rate) << '\n'
      << "kmeans_restarts = " << t.kmeans_restarts << '\n'
      << "convolutional = " << (t.convolutional ? "true" : "false") << '\n'
      << "view_seeds = " << join(t.view_seeds) << '\n';
  return out.str();
}

void RunConfig::validate(std::size_t n_views, std::size_t n_samples) const {
  train.validate(n_views, n_samples);
  if (seeds.empty()) throw UsageError("seeds must list at least one seed");
}

RunConfig parse_run_config(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string s = trim(line.substr(0, line.find('#')));
    if (s.empty()) continue;
    const auto eq = s.find('=');
    if (eq == std::string::npos) {
      throw UsageError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    try {
      cfg.set(trim(s.substr(0, eq)), s.substr(eq + 1));
    } catch (const UsageError& e) {
      throw UsageError("config line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_run_config(ss.str());
  } catch (const UsageError& e) {
    throw UsageError(path.string() + ": " + e.what());
  }
}

}  // namespace demvc
