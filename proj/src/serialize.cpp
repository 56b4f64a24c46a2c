#include "evcharge/serialize.hpp"

#include <cmath>
#include <fstream>

#include "evcharge/error.hpp"

namespace evcharge {

using nlohmann::json;

namespace {

json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

void expect_format(const json& j, const char* format) {
  if (!j.is_object() || j.value("format", "") != format) {
    throw Error(ErrorCode::kParseError, std::string("expected a '") + format + "' document");
  }
}

template <typename T>
T parse_as(const json& j, const char* format) {
  expect_format(j, format);
  try {
    return j.get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, e.what());
  }
}

}  // namespace

void to_json(json& j, const EVRequest& r) {
  j = json{{"id", r.id},         {"arrival", r.arrival}, {"departure", r.departure},
           {"energy", r.energy}, {"rate", r.rate},       {"value", r.value}};
}

void from_json(const json& j, EVRequest& r) {
  j.at("id").get_to(r.id);
  j.at("arrival").get_to(r.arrival);
  j.at("departure").get_to(r.departure);
  j.at("energy").get_to(r.energy);
  j.at("rate").get_to(r.rate);
  j.at("value").get_to(r.value);
}

void to_json(json& j, const StationConfig& c) {
  j = json{{"horizon", c.horizon}, {"capacity", c.capacity}, {"prices", c.prices}};
}

void from_json(const json& j, StationConfig& c) {
  j.at("horizon").get_to(c.horizon);
  j.at("capacity").get_to(c.capacity);
  j.at("prices").get_to(c.prices);
}

void to_json(json& j, const Bounds& b) {
  j = json{{"L", b.L}, {"U", b.U}, {"Dmin", b.Dmin}, {"Dmax", b.Dmax}, {"pmax", b.pmax}};
}

void from_json(const json& j, Bounds& b) {
  j.at("L").get_to(b.L);
  j.at("U").get_to(b.U);
  j.at("Dmin").get_to(b.Dmin);
  j.at("Dmax").get_to(b.Dmax);
  j.at("pmax").get_to(b.pmax);
}

void to_json(json& j, const Instance& inst) {
  j = json{{"format", kInstanceFormat},
           {"config", inst.config},
           {"bounds", inst.bounds},
           {"requests", inst.requests}};
}

void from_json(const json& j, Instance& inst) {
  j.at("config").get_to(inst.config);
  j.at("bounds").get_to(inst.bounds);
  j.at("requests").get_to(inst.requests);
}

void to_json(json& j, const PricingParams& p) {
  j = json{{"bounds", p.bounds}, {"capacity", p.capacity}, {"prices", p.prices},
           {"theta", p.theta},   {"alpha", p.alpha},       {"beta", p.beta}};
}

void from_json(const json& j, PricingParams& p) {
  j.at("bounds").get_to(p.bounds);
  j.at("capacity").get_to(p.capacity);
  j.at("prices").get_to(p.prices);
  j.at("theta").get_to(p.theta);
  j.at("alpha").get_to(p.alpha);
  j.at("beta").get_to(p.beta);
}

void to_json(json& j, const TraceEvent& e) {
  json window = json::array();
  for (std::size_t i = 0; i < e.y.size(); ++i) {
    window.push_back({{"slot", e.y[i].slot},
                      {"y", e.y[i].energy},
                      {"sigma_hat", e.sigma_hat[i]},
                      {"w_before", e.w_before[i]},
                      {"w_after", e.w_after[i]}});
  }
  j = json{{"id", e.id},
           {"feasible", e.feasible},
           {"admitted", e.admitted},
           {"price", e.price ? json(*e.price) : json(nullptr)},
           {"mu_hat", finite_or_null(e.mu_hat)},
           {"capacity_pressed", e.capacity_pressed},
           {"window", window}};
}

void from_json(const json& j, TraceEvent& e) {
  j.at("id").get_to(e.id);
  j.at("feasible").get_to(e.feasible);
  j.at("admitted").get_to(e.admitted);
  const auto& price = j.at("price");
  e.price = price.is_null() ? std::nullopt : std::optional<double>(price.get<double>());
  const auto& mu = j.at("mu_hat");
  e.mu_hat = mu.is_null() ? 0.0 : mu.get<double>();
  j.at("capacity_pressed").get_to(e.capacity_pressed);
  e.y.clear();
  e.sigma_hat.clear();
  e.w_before.clear();
  e.w_after.clear();
  for (const auto& s : j.at("window")) {
    e.y.push_back({s.at("slot").get<Slot>(), s.at("y").get<double>()});
    e.sigma_hat.push_back(s.at("sigma_hat").get<double>());
    e.w_before.push_back(s.at("w_before").get<double>());
    e.w_after.push_back(s.at("w_after").get<double>());
  }
}

void to_json(json& j, const Trace& t) {
  j = json{{"format", kTraceFormat},
           {"instance", t.instance},
           {"params", t.params},
           {"events", t.events}};
}

void from_json(const json& j, Trace& t) {
  j.at("instance").get_to(t.instance);
  j.at("params").get_to(t.params);
  j.at("events").get_to(t.events);
}

void to_json(json& j, const DualCertificate& c) {
  j = json{{"lambda_bar", c.lambda_bar}, {"mu_bar", c.mu_bar}, {"sigma_bar", c.sigma_bar},
           {"eta_bar", c.eta_bar},       {"k_index", c.k_index}};
}

void to_json(json& j, const CheckResult& r) {
  j = json{{"ok", r.ok},
           {"checked", r.checked},
           {"violations", r.violations},
           {"worst_margin", finite_or_null(r.worst_margin)},
           {"examples", r.examples}};
}

void to_json(json& j, const CertReport& r) {
  j = json{
      {"format", kCertReportFormat},
      {"classification", std::string(to_string(r.classification))},
      {"certified", r.passed()},
      {"consistency", r.consistency},
      {"dual_feasible", r.dual_feasible()},
      {"kkt_ok", r.kkt_ok()},
      {"initial_ok", r.initial_ok()},
      {"incremental_ok", r.incremental_ok()},
      {"pd_asserted", r.pd_asserted},
      {"degenerate_k", r.pd.degenerate_k},
      {"k_index", r.pd.k_index},
      {"cr_bound", r.cr_bound},
      {"checks",
       {{"dual_nonnegativity", r.dual.nonnegativity},
        {"dual_value_constraint", r.dual.value_constraint},
        {"dual_slot_constraint", r.dual.slot_constraint},
        {"kkt_stationarity", r.kkt.stationarity},
        {"kkt_slackness", r.kkt.slackness},
        {"kkt_identity", r.kkt.identity},
        {"pd_initial", r.pd.initial},
        {"pd_incremental", r.pd.incremental}}},
      {"primal", r.pd.primal},
      {"dual", r.pd.dual}};
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kParseError, path.string() + ": " + e.what());
  }
}

void write_json(const std::filesystem::path& path, const json& doc) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  out << doc.dump(1) << '\n';
  if (!out) throw Error(ErrorCode::kIoError, "failed writing " + path.string());
}

Instance load_instance(const std::filesystem::path& path) {
  return parse_as<Instance>(read_json(path), kInstanceFormat);
}

void save_instance(const std::filesystem::path& path, const Instance& inst) {
  write_json(path, json(inst));
}

Trace load_trace(const std::filesystem::path& path) {
  return parse_as<Trace>(read_json(path), kTraceFormat);
}

void save_trace(const std::filesystem::path& path, const Trace& trace) {
  write_json(path, json(trace));
}

}  // namespace evcharge
