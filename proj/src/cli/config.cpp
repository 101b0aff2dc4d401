#include "midpoint/cli.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace midpoint::cli {
namespace {

using nlohmann::json;

Vector to_vector(const json& j) {
  if (!j.is_array()) throw ConfigError("expected a numeric array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return v;
}

Matrix to_matrix(const json& j, Eigen::Index d) {
  if (!j.is_array() || j.size() != static_cast<std::size_t>(d)) throw ConfigError("covariance must be a d x d array");
  Matrix m(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    const Vector row = to_vector(j[static_cast<std::size_t>(i)]);
    if (row.size() != d) throw ConfigError("covariance must be a d x d array");
    m.row(i) = row.transpose();
  }
  return m;
}

json from_vector(const std::vector<double>& v) { return json(v); }

const std::pair<const char*, double ScheduleConstants::*> kConstantFields[] = {
    {"c_T", &ScheduleConstants::c_T},         {"c_delta", &ScheduleConstants::c_delta},
    {"c_hpred", &ScheduleConstants::c_hpred}, {"c_hcorr", &ScheduleConstants::c_hcorr},
    {"c_Tcorr", &ScheduleConstants::c_Tcorr}, {"c_gamma", &ScheduleConstants::c_gamma},
    {"c_R", &ScheduleConstants::c_R},         {"c_K", &ScheduleConstants::c_K},
    {"c_Rcorr", &ScheduleConstants::c_Rcorr}, {"c_Kcorr", &ScheduleConstants::c_Kcorr},
    {"c_hrand", &ScheduleConstants::c_hrand}, {"c_Nrand", &ScheduleConstants::c_Nrand},
};

ScheduleMode mode_from_string(const std::string& s) {
  if (s == "sequential") return ScheduleMode::Sequential;
  if (s == "parallel") return ScheduleMode::Parallel;
  if (s == "logconcave") return ScheduleMode::LogConcave;
  throw ConfigError("unknown schedule mode: " + s);
}

}  // namespace

const char* version() noexcept { return MIDPOINT_SAMPLER_VERSION; }

TargetModel parse_target(const json& spec) {
  try {
    if (!spec.is_object()) throw ConfigError("target must be an object");
    const TargetKind kind = target_kind_from_string(spec.at("kind").get<std::string>());
    const int dim = spec.at("dim").get<int>();
    if (dim < 1) throw ConfigError("target dim must be positive");
    std::vector<Vector> means;
    std::vector<Matrix> covs;
    if (spec.contains("means"))
      for (const auto& m : spec["means"]) means.push_back(to_vector(m));
    if (spec.contains("covs"))
      for (const auto& c : spec["covs"]) covs.push_back(to_matrix(c, dim));
    for (const auto& m : means)
      if (m.size() != dim) throw ConfigError("target mean has wrong dimension");
    const auto first_mean = [&] { return means.empty() ? Vector(Vector::Zero(dim)) : means.front(); };
    std::optional<TargetModel> model;
    switch (kind) {
      case TargetKind::IsotropicGaussian: {
        const double var = spec.value("var", covs.empty() ? 1.0 : covs.front()(0, 0));
        model = TargetModel::isotropic_gaussian(dim, var, first_mean());
        break;
      }
      case TargetKind::AnisotropicGaussian:
      case TargetKind::QuadraticLogConcave: {
        if (covs.size() != 1) throw ConfigError("Gaussian targets need exactly one covariance");
        model = kind == TargetKind::AnisotropicGaussian ? TargetModel::anisotropic_gaussian(first_mean(), covs.front())
                                                        : TargetModel::quadratic_log_concave(first_mean(), covs.front());
        break;
      }
      case TargetKind::GaussianMixture: {
        std::vector<double> weights = spec.at("weights").get<std::vector<double>>();
        if (covs.empty()) covs.assign(weights.size(), Matrix::Identity(dim, dim));
        model = TargetModel::gaussian_mixture(std::move(weights), std::move(means), std::move(covs));
        break;
      }
    }
    const double m = spec.value("m", 0.0);
    const double L = spec.value("L", 0.0);
    if (m > 0.0 || L > 0.0) model->set_constants(m, L);
    return *model;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("invalid target: ") + e.what());
  }
}

RunConfig parse_config(const json& doc) {
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  RunConfig c;
  c.raw = doc;
  try {
    c.target = parse_target(doc.at("target"));
    c.algorithm = doc.value("algorithm", c.algorithm);
    if (c.algorithm != "seq" && c.algorithm != "parallel" && c.algorithm != "logconcave" && c.algorithm != "baseline-exp")
      throw ConfigError("unknown algorithm: " + c.algorithm);
    c.eps = doc.value("eps", c.eps);
    c.beta = doc.value("beta", c.beta);
    c.eps_sc = doc.value("eps_sc", c.eps_sc);
    c.batch = doc.value("batch", static_cast<long>(c.batch));
    c.seed = doc.value("seed", c.seed);
    c.workers = doc.value("workers", c.workers);
    c.out = doc.value("out", c.out.string());
    if (doc.contains("constants")) c.constants = constants_from_json(doc["constants"]);
    if (doc.contains("study")) {
      const json& s = doc["study"];
      c.study.h_grid = s.value("h_grid", c.study.h_grid);
      c.study.t_start = s.value("t_start", c.study.t_start);
      c.study.t_end = s.value("t_end", c.study.t_end);
      c.study.particles = s.value("particles", static_cast<long>(c.study.particles));
      c.study.t_n = s.value("t_n", c.study.t_n);
      c.study.window = s.value("window", c.study.window);
      c.study.midpoints = s.value("midpoints", c.study.midpoints);
      c.study.rounds = s.value("rounds", c.study.rounds);
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("invalid config: ") + e.what());
  }
  if (!(c.eps > 0.0)) throw ConfigError("eps must be positive");
  if (c.batch < 1) throw ConfigError("batch must be positive");
  if (c.workers < 1) throw ConfigError("workers must be positive");
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config: " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  return parse_config(doc);
}

std::string config_hash(const json& doc) {
  json key = doc;
  if (key.is_object()) {
    key.erase("out");
    key.erase("workers");
  }
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : key.dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << h;
  return os.str();
}

json to_json(const ScheduleConstants& c) {
  json j = json::object();
  for (const auto& [name, field] : kConstantFields) j[name] = c.*field;
  return j;
}

ScheduleConstants constants_from_json(const json& j, ScheduleConstants base) {
  if (!j.is_object()) throw ConfigError("constants must be an object");
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (const auto& [name, field] : kConstantFields) {
      if (key == name) {
        base.*field = value.get<double>();
        if (!(base.*field > 0.0)) throw ConfigError("constant " + key + " must be positive");
        known = true;
      }
    }
    if (!known) throw ConfigError("unknown constant: " + key);
  }
  return base;
}

json to_json(const Schedule& s) {
  json blocks = json::array();
  for (const auto& b : s.blocks)
    blocks.push_back({{"t_start", b.t_start}, {"t_end", b.t_end}, {"steps", from_vector(b.steps)},
                      {"midpoints", b.midpoints}, {"picard_depth", b.picard_depth}});
  return {{"mode", to_string(s.mode)},
          {"L", s.L},
          {"d", s.d},
          {"eps", s.eps},
          {"m2", s.m2},
          {"beta", s.beta},
          {"m", s.m},
          {"T", s.T},
          {"delta", s.delta},
          {"h_pred", s.h_pred},
          {"N0", s.N0},
          {"tail_steps", from_vector(s.tail_steps)},
          {"blocks", blocks},
          {"corrector",
           {{"duration", s.corrector.duration},
            {"step", s.corrector.step},
            {"gamma", s.corrector.gamma},
            {"midpoints", s.corrector.midpoints},
            {"picard_depth", s.corrector.picard_depth}}},
          {"kappa", s.kappa},
          {"h_rand", s.h_rand},
          {"N_rand", s.N_rand},
          {"u", s.u},
          {"constants", to_json(s.constants)},
          {"notes", s.notes}};
}

Schedule schedule_from_json(const json& j) {
  Schedule s;
  s.mode = mode_from_string(j.at("mode").get<std::string>());
  s.L = j.at("L");
  s.d = j.at("d");
  s.eps = j.at("eps");
  s.m2 = j.at("m2");
  s.beta = j.at("beta");
  s.m = j.at("m");
  s.T = j.at("T");
  s.delta = j.at("delta");
  s.h_pred = j.at("h_pred");
  s.N0 = j.at("N0");
  s.tail_steps = j.at("tail_steps").get<std::vector<double>>();
  for (const auto& b : j.at("blocks")) {
    PredictorBlock block;
    block.t_start = b.at("t_start");
    block.t_end = b.at("t_end");
    block.steps = b.at("steps").get<std::vector<double>>();
    block.midpoints = b.at("midpoints").get<std::vector<int>>();
    block.picard_depth = b.at("picard_depth").get<std::vector<int>>();
    s.blocks.push_back(std::move(block));
  }
  const json& c = j.at("corrector");
  s.corrector.duration = c.at("duration");
  s.corrector.step = c.at("step");
  s.corrector.gamma = c.at("gamma");
  s.corrector.midpoints = c.at("midpoints");
  s.corrector.picard_depth = c.at("picard_depth");
  s.kappa = j.at("kappa");
  s.h_rand = j.at("h_rand");
  s.N_rand = j.at("N_rand");
  s.u = j.at("u");
  s.constants = constants_from_json(j.at("constants"));
  s.notes = j.at("notes").get<std::vector<std::string>>();
  return s;
}

json to_json(const WorkReport& w) {
  return {{"parallel_rounds", w.parallel_rounds}, {"score_evaluations", w.score_evaluations}, {"wall_clock", w.wall_clock}};
}

Schedule build_schedule(const RunConfig& config) {
  const TargetModel& t = *config.target;
  const double L = t.smoothness();
  if (config.algorithm == "logconcave") return make_logconcave_schedule(t.strong_convexity(), L, t.dim(), config.eps, config.constants);
  if (config.algorithm == "parallel")
    return make_parallel_schedule(L, t.dim(), config.eps, t.second_moment(), config.beta, config.constants);
  return make_sequential_schedule(L, t.dim(), config.eps, t.second_moment(), config.constants);
}

void write_samples(const std::filesystem::path& path, const Batch& x) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  // column-major d x n is row-major n x d
  std::vector<double> buf(x.data(), x.data() + x.size());
  if constexpr (std::endian::native == std::endian::big) {
    for (double& v : buf) {
      std::uint64_t bits;
      std::memcpy(&bits, &v, sizeof bits);
      bits = __builtin_bswap64(bits);
      std::memcpy(&v, &bits, sizeof bits);
    }
  }
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(double)));
}

Batch read_samples(const std::filesystem::path& path, int d) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  const auto bytes = static_cast<std::size_t>(in.tellg());
  if (d < 1 || bytes % (sizeof(double) * static_cast<std::size_t>(d)) != 0)
    throw std::runtime_error("sample file size does not match dimension");
  in.seekg(0);
  Batch x(d, static_cast<Eigen::Index>(bytes / sizeof(double) / static_cast<std::size_t>(d)));
  in.read(reinterpret_cast<char*>(x.data()), static_cast<std::streamsize>(bytes));
  if constexpr (std::endian::native == std::endian::big) {
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      std::uint64_t bits;
      std::memcpy(&bits, x.data() + i, sizeof bits);
      bits = __builtin_bswap64(bits);
      std::memcpy(x.data() + i, &bits, sizeof bits);
    }
  }
  return x;
}

}  // namespace midpoint::cli
