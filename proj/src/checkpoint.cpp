#include "ppf/checkpoint.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <limits>

#include <json.hpp>

#include "ppf/error.hpp"

namespace ppf {

namespace {

constexpr char kMagic[8] = {'P', 'P', 'F', 'C', 'K', 'P', 'T', '\0'};
constexpr std::uint32_t kVersion = 1;

using Json = nlohmann::ordered_json;

void put_u32(std::string& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xff));
}

std::uint64_t get_u64(const unsigned char* p, int bytes) {
  std::uint64_t v = 0;
  for (int b = bytes - 1; b >= 0; --b) v = (v << 8) | p[b];
  return v;
}

// Appends m row-major as little-endian float64 and records it in `arrays`.
void put_matrix(std::string& payload, Json& arrays, const std::string& name, const Matrix& m) {
  Json a;
  a["name"] = name;
  a["rows"] = m.rows();
  a["cols"] = m.cols();
  a["offset"] = payload.size();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) put_u64(payload, std::bit_cast<std::uint64_t>(m(i, j)));
  arrays.push_back(std::move(a));
}

Json config_json(const SolverConfig& c) {
  Json j;
  j["k"] = c.k;
  j["lambda"] = c.lambda;
  j["alpha"] = c.alpha;
  j["max_iter"] = c.max_iter;
  // JSON has no infinity; a null epsilon means "stop immediately".
  if (std::isinf(c.epsilon)) {
    j["epsilon"] = nullptr;
  } else {
    j["epsilon"] = c.epsilon;
  }
  j["rcond"] = c.rcond;
  j["seed"] = c.seed;
  return j;
}

SolverConfig config_from(const Json& j) {
  SolverConfig c;
  c.k = j.at("k").get<int>();
  c.lambda = j.at("lambda").get<double>();
  c.alpha = j.at("alpha").get<double>();
  c.max_iter = j.at("max_iter").get<int>();
  c.epsilon = j.at("epsilon").is_null() ? std::numeric_limits<double>::infinity()
                                        : j.at("epsilon").get<double>();
  c.rcond = j.at("rcond").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

Json report_json(const FitReport& r) {
  Json j;
  j["iterations"] = r.iterations;
  j["final_loss"] = r.final_loss;
  j["stop"] = to_string(r.stop);
  j["zero_grad_c"] = r.zero_grad_c;
  j["zero_grad_w"] = r.zero_grad_w;
  j["losses"] = r.losses;
  return j;
}

FitReport report_from(const Json& j) {
  FitReport r;
  r.iterations = j.at("iterations").get<int>();
  r.final_loss = j.at("final_loss").get<double>();
  const auto stop = j.at("stop").get<std::string>();
  if (stop == "converged") {
    r.stop = StopReason::Converged;
  } else if (stop == "max-iter") {
    r.stop = StopReason::MaxIter;
  } else if (stop == "zero-gradient") {
    r.stop = StopReason::ZeroGradient;
  } else {
    throw IoError("checkpoint: unknown stop reason '" + stop + "'");
  }
  r.zero_grad_c = j.at("zero_grad_c").get<int>();
  r.zero_grad_w = j.at("zero_grad_w").get<int>();
  r.losses = j.at("losses").get<std::vector<double>>();
  return r;
}

Matrix get_matrix(const std::string& payload, const Json& arrays, const std::string& name) {
  for (const auto& a : arrays) {
    if (a.at("name").get<std::string>() != name) continue;
    const auto rows = a.at("rows").get<Eigen::Index>();
    const auto cols = a.at("cols").get<Eigen::Index>();
    const auto offset = a.at("offset").get<std::size_t>();
    if (rows < 0 || cols < 0) throw IoError("checkpoint: negative shape for " + name);
    const auto bytes = static_cast<std::size_t>(rows * cols) * 8;
    if (offset > payload.size() || payload.size() - offset < bytes)
      throw IoError("checkpoint: array " + name + " runs past the end of the file");
    const auto* p = reinterpret_cast<const unsigned char*>(payload.data()) + offset;
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j, p += 8) m(i, j) = std::bit_cast<double>(get_u64(p, 8));
    return m;
  }
  throw IoError("checkpoint: missing array " + name);
}

ModelState state_of(const Checkpoint::Side& s) {
  ModelState st;
  st.c = s.c;
  st.w = s.w;
  st.flows = {s.flows_last};
  return st;
}

}  // namespace

Checkpoint make_checkpoint(const AreaCatalog& catalog, Period period, const SolverConfig& cfg,
                           const NeighborModel& nbr, const BidirectionalFit& fit) {
  Checkpoint ck;
  ck.period = period;
  ck.config = cfg;
  ck.ids = catalog.ids;
  ck.known = catalog.known;
  ck.h = nbr.h;
  const auto side = [](const FitResult& r) {
    return Checkpoint::Side{r.state.c, r.state.w, r.state.flows.back(), r.report};
  };
  ck.departures = side(fit.departures);
  ck.arrivals = side(fit.arrivals);
  return ck;
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
  std::string payload;
  Json arrays = Json::array();
  put_matrix(payload, arrays, "H", ck.h);
  put_matrix(payload, arrays, "departures.C", ck.departures.c);
  put_matrix(payload, arrays, "departures.W", ck.departures.w);
  put_matrix(payload, arrays, "departures.F_D", ck.departures.flows_last);
  put_matrix(payload, arrays, "arrivals.C", ck.arrivals.c);
  put_matrix(payload, arrays, "arrivals.W", ck.arrivals.w);
  put_matrix(payload, arrays, "arrivals.F_D", ck.arrivals.flows_last);

  Json header;
  header["format"] = "ppf-checkpoint";
  header["version"] = kVersion;
  header["period"] = to_string(ck.period);
  header["config"] = config_json(ck.config);
  header["ids"] = ck.ids;
  std::vector<int> known;
  for (bool b : ck.known) known.push_back(b ? 1 : 0);
  header["known"] = known;
  header["departures"] = report_json(ck.departures.report);
  header["arrivals"] = report_json(ck.arrivals.report);
  header["arrays"] = std::move(arrays);
  const std::string text = header.dump();

  std::string out(kMagic, sizeof kMagic);
  put_u32(out, kVersion);
  put_u64(out, text.size());
  out += text;
  out += payload;

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  f.close();
  if (!f) throw IoError("write failed for " + path.string());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string());
  const std::string data((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  constexpr std::size_t kFixed = sizeof kMagic + 4 + 8;
  if (data.size() < kFixed || data.compare(0, sizeof kMagic, kMagic, sizeof kMagic) != 0)
    throw IoError(path.string() + ": not a checkpoint archive");
  const auto* p = reinterpret_cast<const unsigned char*>(data.data());
  const auto version = get_u64(p + sizeof kMagic, 4);
  if (version != kVersion)
    throw IoError(path.string() + ": unsupported checkpoint version " + std::to_string(version));
  const auto header_len = get_u64(p + sizeof kMagic + 4, 8);
  if (header_len > data.size() - kFixed) throw IoError(path.string() + ": truncated header");

  Checkpoint ck;
  try {
    const Json header = Json::parse(data.substr(kFixed, header_len));
    const std::string payload = data.substr(kFixed + header_len);
    const auto period = parse_period(header.at("period").get<std::string>());
    if (!period) throw IoError("unknown period");
    ck.period = *period;
    ck.config = config_from(header.at("config"));
    ck.ids = header.at("ids").get<std::vector<std::string>>();
    for (int b : header.at("known").get<std::vector<int>>()) ck.known.push_back(b != 0);
    const Json& arrays = header.at("arrays");
    ck.h = get_matrix(payload, arrays, "H");
    ck.departures = {get_matrix(payload, arrays, "departures.C"),
                     get_matrix(payload, arrays, "departures.W"),
                     get_matrix(payload, arrays, "departures.F_D"),
                     report_from(header.at("departures"))};
    ck.arrivals = {get_matrix(payload, arrays, "arrivals.C"),
                   get_matrix(payload, arrays, "arrivals.W"),
                   get_matrix(payload, arrays, "arrivals.F_D"),
                   report_from(header.at("arrivals"))};
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path.string() + ": malformed checkpoint header: " + e.what());
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }

  const auto n = static_cast<Eigen::Index>(ck.ids.size());
  if (ck.known.size() != ck.ids.size()) throw IoError(path.string() + ": ids and known differ in length");
  for (const Matrix* m : {&ck.h, &ck.departures.c, &ck.departures.w, &ck.departures.flows_last,
                          &ck.arrivals.c, &ck.arrivals.w, &ck.arrivals.flows_last})
    if (m->rows() != n || m->cols() != n)
      throw IoError(path.string() + ": array shape does not match the area count");
  return ck;
}

Matrix complete_from_checkpoint(const Checkpoint& ck, const AreaCatalog& catalog,
                                const Matrix& observed_last) {
  if (catalog.ids != ck.ids || catalog.known != ck.known)
    throw InvalidInput("dataset areas or known flags differ from the checkpoint");
  const auto n = static_cast<Eigen::Index>(ck.ids.size());
  if (observed_last.rows() != n || observed_last.cols() != n)
    throw InvalidInput("observed flow matrix does not match the checkpoint");
  const ObservationMask mask = build_mask(catalog);
  const ObservationMask mask_t{mask.y.transpose()};
  const Matrix row_side = predict(state_of(ck.departures), ck.h, mask, ck.departures.flows_last);
  const Matrix col_side =
      predict(state_of(ck.arrivals), ck.h, mask_t, ck.arrivals.flows_last).transpose();
  return merge_predictions(mask.y.cwiseProduct(observed_last), row_side, col_side, mask);
}

}  // namespace ppf
