#include <fstream>
#include <map>
#include <sstream>

#include "gdiff/errors.hpp"
#include "gdiff/experiment.hpp"

namespace gdiff {

namespace {

using SectionMap = std::map<std::string, std::map<std::string, std::string>>;

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

SectionMap read_sections(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path + "'");
  SectionMap sections;
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw IoError(path + ":" + std::to_string(lineno) +
                      ": unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      sections[section];
      continue;
    }
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw IoError(path + ":" + std::to_string(lineno) +
                    ": expected 'key = value'");
    sections[section][trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return sections;
}

// Collects violations instead of failing fast.
class Checker {
public:
  explicit Checker(const SectionMap& sections) : sections_(sections) {}

  bool has(const std::string& sec, const std::string& key) const {
    auto s = sections_.find(sec);
    return s != sections_.end() && s->second.count(key) > 0;
  }
  std::string raw(const std::string& sec, const std::string& key) const {
    return sections_.at(sec).at(key);
  }

  std::optional<double> real(const std::string& sec, const std::string& key) {
    if (!has(sec, key)) return std::nullopt;
    std::istringstream ss(raw(sec, key));
    double v;
    if (!(ss >> v) || !(ss >> std::ws).eof()) {
      fail(sec, key, "is not a number");
      return std::nullopt;
    }
    return v;
  }
  std::optional<long long> integer(const std::string& sec,
                                   const std::string& key) {
    if (!has(sec, key)) return std::nullopt;
    std::istringstream ss(raw(sec, key));
    long long v;
    if (!(ss >> v) || !(ss >> std::ws).eof()) {
      fail(sec, key, "is not an integer");
      return std::nullopt;
    }
    return v;
  }
  std::vector<std::string> tokens(const std::string& sec,
                                  const std::string& key) {
    std::vector<std::string> out;
    if (!has(sec, key)) return out;
    std::istringstream ss(raw(sec, key));
    std::string tok;
    while (ss >> tok) out.push_back(tok);
    return out;
  }
  std::optional<Eigen::VectorXd> vector(const std::string& sec,
                                        const std::string& key) {
    if (!has(sec, key)) return std::nullopt;
    auto toks = tokens(sec, key);
    Eigen::VectorXd v(toks.size());
    for (size_t i = 0; i < toks.size(); ++i) {
      std::istringstream ss(toks[i]);
      if (!(ss >> v[i])) {
        fail(sec, key, "contains a non-numeric entry");
        return std::nullopt;
      }
    }
    return v;
  }
  // Rows separated by ';', entries by whitespace.
  std::optional<Eigen::MatrixXd> matrix(const std::string& sec,
                                        const std::string& key) {
    if (!has(sec, key)) return std::nullopt;
    std::vector<std::vector<double>> rows;
    std::string text = raw(sec, key);
    std::istringstream rowstream(text);
    std::string row;
    while (std::getline(rowstream, row, ';')) {
      std::istringstream ss(row);
      std::vector<double> vals;
      double v;
      while (ss >> v) vals.push_back(v);
      if (!(ss >> std::ws).eof()) {
        fail(sec, key, "contains a non-numeric entry");
        return std::nullopt;
      }
      if (!vals.empty()) rows.push_back(vals);
    }
    if (rows.empty()) {
      fail(sec, key, "is empty");
      return std::nullopt;
    }
    for (const auto& r : rows)
      if (r.size() != rows.front().size()) {
        fail(sec, key, "has ragged rows");
        return std::nullopt;
      }
    Eigen::MatrixXd m(rows.size(), rows.front().size());
    for (size_t i = 0; i < rows.size(); ++i)
      for (size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
    return m;
  }

  void fail(const std::string& sec, const std::string& key,
            const std::string& why) {
    errors.push_back("[" + sec + "] " + key + " " + why);
  }
  void require(bool cond, const std::string& message) {
    if (!cond) errors.push_back(message);
  }

  std::vector<std::string> errors;

private:
  const SectionMap& sections_;
};

bool file_readable(const std::string& path) {
  return std::ifstream(path).good();
}

}  // namespace

std::string kind_name(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::kToy2d: return "toy2d";
    case ExperimentKind::kToy3d: return "toy3d";
    case ExperimentKind::kAdsnDeblur: return "adsn-deblur";
    case ExperimentKind::kAdsnGenerate: return "adsn-generate";
  }
  return "?";
}

ConfigValidation validate_config(const std::string& path) {
  ConfigValidation result;
  SectionMap sections;
  try {
    sections = read_sections(path);
  } catch (const IoError& e) {
    result.errors.push_back(e.what());
    return result;
  }
  Checker chk(sections);
  ExperimentConfig cfg;
  cfg.config_path = path;

  // [experiment]
  std::string kind_text =
      chk.has("experiment", "kind") ? chk.raw("experiment", "kind") : "";
  bool toy = false, image = false;
  if (kind_text == "toy2d") cfg.kind = ExperimentKind::kToy2d, toy = true;
  else if (kind_text == "toy3d") cfg.kind = ExperimentKind::kToy3d, toy = true;
  else if (kind_text == "adsn-deblur")
    cfg.kind = ExperimentKind::kAdsnDeblur, image = true;
  else if (kind_text == "adsn-generate")
    cfg.kind = ExperimentKind::kAdsnGenerate, image = true;
  else
    chk.require(false,
                "[experiment] kind must be one of toy2d, toy3d, adsn-deblur, "
                "adsn-generate");

  if (auto seed = chk.integer("experiment", "seed")) {
    chk.require(*seed >= 0, "[experiment] seed must be non-negative");
    cfg.seed = static_cast<std::uint64_t>(*seed);
  } else {
    chk.require(false, "[experiment] seed is required");
  }
  if (chk.has("experiment", "output_dir"))
    cfg.output_dir = chk.raw("experiment", "output_dir");

  // [schedule]
  if (auto steps = chk.integer("schedule", "steps")) {
    chk.require(*steps >= 1, "[schedule] steps must be >= 1");
    cfg.steps = static_cast<int>(*steps);
  }
  if (auto b = chk.real("schedule", "beta_start")) cfg.beta_start = *b;
  if (auto b = chk.real("schedule", "beta_end")) cfg.beta_end = *b;
  chk.require(cfg.beta_start > 0.0 && cfg.beta_start <= cfg.beta_end &&
                  cfg.beta_end < 1.0,
              "[schedule] need 0 < beta_start <= beta_end < 1");

  // [problem]
  if (auto s = chk.real("problem", "sigma")) cfg.sigma = *s;
  chk.require(cfg.sigma > 0.0, "[problem] sigma must be > 0");

  if (toy) {
    const int want_dim = cfg.kind == ExperimentKind::kToy2d ? 2 : 3;
    auto mean = chk.vector("prior", "mean");
    auto cov = chk.matrix("prior", "cov");
    chk.require(mean.has_value(), "[prior] mean is required for toy runs");
    chk.require(cov.has_value(), "[prior] cov is required for toy runs");
    if (mean) {
      chk.require(mean->size() == want_dim,
                  "[prior] mean must have dimension " +
                      std::to_string(want_dim) + " for " + kind_text);
      cfg.prior_mean = *mean;
    }
    if (cov) {
      chk.require(cov->rows() == want_dim && cov->cols() == want_dim,
                  "[prior] cov must be " + std::to_string(want_dim) + "x" +
                      std::to_string(want_dim) + " for " + kind_text);
      if (cov->rows() == cov->cols())
        chk.require((*cov - cov->transpose()).cwiseAbs().maxCoeff() <= 1e-12,
                    "[prior] cov must be symmetric");
      cfg.prior_cov = *cov;
    }
    auto observed = chk.vector("problem", "observed");
    chk.require(observed.has_value() && observed->size() > 0,
                "[problem] observed coordinate list is required for toy runs");
    if (observed) {
      for (int i = 0; i < observed->size(); ++i) {
        double o = (*observed)[i];
        bool ok = o == std::floor(o) && o >= 0 && o < want_dim;
        chk.require(ok, "[problem] observed indices must be integers in [0, " +
                            std::to_string(want_dim - 1) + "]");
        if (ok) cfg.observed.push_back(static_cast<int>(o));
      }
      for (size_t i = 0; i + 1 < cfg.observed.size(); ++i)
        for (size_t j = i + 1; j < cfg.observed.size(); ++j)
          chk.require(cfg.observed[i] != cfg.observed[j],
                      "[problem] observed indices must be distinct");
    }
    if (auto obs = chk.vector("problem", "observation")) {
      chk.require(obs->size() == static_cast<int>(cfg.observed.size()),
                  "[problem] observation length must match observed indices");
      cfg.observation = *obs;
    }
  }

  if (image) {
    chk.require(chk.has("prior", "texture"),
                "[prior] texture is required for texture runs");
    if (chk.has("prior", "texture")) {
      cfg.texture_path = chk.raw("prior", "texture");
      chk.require(file_readable(cfg.texture_path),
                  "[prior] texture file '" + cfg.texture_path +
                      "' is not readable");
    }
    if (cfg.kind == ExperimentKind::kAdsnDeblur) {
      chk.require(chk.has("problem", "kernel"),
                  "[problem] kernel is required for adsn-deblur");
      if (chk.has("problem", "kernel")) {
        cfg.kernel_spec = chk.raw("problem", "kernel");
        if (cfg.kernel_spec.rfind("bicubic:", 0) == 0) {
          std::istringstream ss(cfg.kernel_spec.substr(8));
          int factor = 0;
          chk.require(static_cast<bool>(ss >> factor) && factor >= 1,
                      "[problem] kernel bicubic factor must be >= 1");
        } else {
          chk.require(file_readable(cfg.kernel_spec),
                      "[problem] kernel file '" + cfg.kernel_spec +
                          "' is not readable");
        }
      }
    }
    if (auto n = chk.integer("output", "samples")) {
      chk.require(*n >= 0 && *n <= 64, "[output] samples must be in [0, 64]");
      cfg.sample_count = static_cast<int>(*n);
    }
  }

  // [models]
  cfg.model_names = chk.tokens("models", "list");
  if (cfg.kind != ExperimentKind::kAdsnGenerate)
    chk.require(!cfg.model_names.empty(), "[models] list is required");
  bool wants_dps = false;
  for (const auto& name : cfg.model_names) {
    chk.require(name == "dps" || name == "pigdm" || name == "cgdm",
                "[models] unknown model '" + name + "'");
    if (name == "dps") wants_dps = true;
  }
  if (auto a = chk.real("models", "alpha_dps")) {
    chk.require(*a > 0.0, "[models] alpha_dps must be > 0");
    cfg.alpha_dps = *a;
  }
  // No default: the weight is data and problem dependent.
  chk.require(!wants_dps || cfg.alpha_dps.has_value(),
              "[models] alpha_dps is required when dps is listed");

  result.errors = std::move(chk.errors);
  if (result.errors.empty()) result.config = std::move(cfg);
  return result;
}

ExperimentConfig load_config(const std::string& path) {
  if (!file_readable(path)) throw IoError("cannot open config '" + path + "'");
  ConfigValidation v = validate_config(path);
  if (!v.config) {
    std::string report = "invalid config '" + path + "':";
    for (const auto& e : v.errors) report += "\n  - " + e;
    throw ParameterError(report);
  }
  return *v.config;
}

}  // namespace gdiff
