#pragma once

// MISO interference / broadcast channel instances: generation, fixed reference fixtures, JSON persistence.

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "igs/common.hpp"

namespace igs {

enum class Topology { InterferenceChannel, BroadcastChannel };

/// All direct and cross channel row vectors of a K-user MISO channel plus the receiver noise power.
///
/// h(k, j) is the 1 x M channel from transmitter j to receiver k (stored as a length-M column).
/// For a broadcast channel every row k repeats the same vector h_k for all j.
class ChannelSet {
 public:
  ChannelSet(Index users, Index antennas, std::vector<std::vector<CVector>> h, double noise_variance,
             Topology topology = Topology::InterferenceChannel)
      : users_(users), antennas_(antennas), h_(std::move(h)), noise_variance_(noise_variance),
        topology_(topology) {
    if (users_ < 1 || antennas_ < 1) throw InvariantViolation("channel set needs K >= 1 and M >= 1");
    if (static_cast<Index>(h_.size()) != users_)
      throw DimensionMismatch("expected " + std::to_string(users_) + " receiver rows, got " +
                              std::to_string(h_.size()));
    for (Index k = 0; k < users_; ++k) {
      if (static_cast<Index>(h_[k].size()) != users_)
        throw DimensionMismatch("row " + std::to_string(k) + ": expected " + std::to_string(users_) +
                                " transmitters, got " + std::to_string(h_[k].size()));
      for (Index j = 0; j < users_; ++j)
        if (h_[k][j].size() != antennas_)
          throw DimensionMismatch("h[" + std::to_string(k) + "][" + std::to_string(j) + "] has length " +
                                  std::to_string(h_[k][j].size()) + ", expected " + std::to_string(antennas_));
    }
    if (!(noise_variance_ > 0.0) || !std::isfinite(noise_variance_))
      throw InvariantViolation("noise variance must be positive and finite");
    if (topology_ == Topology::BroadcastChannel) {
      for (Index k = 0; k < users_; ++k)
        for (Index j = 0; j < users_; ++j)
          if (h_[k][j] != h_[k][k])
            throw InvariantViolation("broadcast channel requires h[k][j] == h[k][k] for all j");
    }
  }

  /// Broadcast channel with per-user vectors h_k, embedded as an interference channel.
  static ChannelSet broadcast(const std::vector<CVector>& users, double noise_variance) {
    if (users.empty()) throw InvariantViolation("broadcast channel needs at least one user");
    const auto k = static_cast<Index>(users.size());
    std::vector<std::vector<CVector>> h(users.size());
    for (std::size_t r = 0; r < users.size(); ++r) h[r].assign(users.size(), users[r]);
    return ChannelSet(k, users.front().size(), std::move(h), noise_variance, Topology::BroadcastChannel);
  }

  Index users() const { return users_; }
  Index antennas() const { return antennas_; }
  double noise_variance() const { return noise_variance_; }
  Topology topology() const { return topology_; }
  const CVector& h(Index k, Index j) const { return h_[k][j]; }
  const std::vector<std::vector<CVector>>& rows() const { return h_; }

  /// h(k, j) * v without conjugation.
  Complex gain(Index k, Index j, const CVector& v) const { return h_[k][j].transpose() * v; }

  ChannelSet conjugated() const {
    auto h = h_;
    for (auto& row : h)
      for (auto& v : row) v = v.conjugate();
    return ChannelSet(users_, antennas_, std::move(h), noise_variance_, topology_);
  }

  friend bool operator==(const ChannelSet& a, const ChannelSet& b) {
    return a.users_ == b.users_ && a.antennas_ == b.antennas_ && a.noise_variance_ == b.noise_variance_ &&
           a.topology_ == b.topology_ && a.h_ == b.h_;
  }

 private:
  Index users_;
  Index antennas_;
  std::vector<std::vector<CVector>> h_;
  double noise_variance_;
  Topology topology_;
};

enum class PowerMode { PerTransmitter, SumPower };

/// Per-transmitter budgets P_k, or a single total P shared by all streams (broadcast).
class PowerBudget {
 public:
  PowerBudget(PowerMode mode, std::vector<double> values) : mode_(mode), values_(std::move(values)) {
    if (mode_ == PowerMode::SumPower && values_.size() != 1)
      throw InvariantViolation("sum-power budget takes exactly one value");
    if (values_.empty()) throw InvariantViolation("power budget is empty");
    for (double p : values_)
      if (!(p > 0.0) || !std::isfinite(p)) throw InvariantViolation("power budgets must be positive");
  }

  static PowerBudget per_transmitter(Index users, double power) {
    return PowerBudget(PowerMode::PerTransmitter, std::vector<double>(static_cast<std::size_t>(users), power));
  }
  static PowerBudget sum_power(double power) { return PowerBudget(PowerMode::SumPower, {power}); }

  PowerMode mode() const { return mode_; }
  const std::vector<double>& values() const { return values_; }

  /// Largest power a single user could spend.
  double user_cap(Index k) const {
    return mode_ == PowerMode::SumPower ? values_.front() : values_.at(static_cast<std::size_t>(k));
  }
  double total() const {
    double t = 0.0;
    for (double p : values_) t += p;
    return t;
  }

  void check_users(Index users) const {
    if (mode_ == PowerMode::PerTransmitter && static_cast<Index>(values_.size()) != users)
      throw DimensionMismatch("per-transmitter budget has " + std::to_string(values_.size()) +
                              " entries for " + std::to_string(users) + " users");
  }

  friend bool operator==(const PowerBudget& a, const PowerBudget& b) {
    return a.mode_ == b.mode_ && a.values_ == b.values_;
  }

 private:
  PowerMode mode_;
  std::vector<double> values_;
};

/// P = 10^(snr/10) with unit noise power.
inline double snr_db_to_power(double snr_db) { return std::pow(10.0, snr_db / 10.0); }

/// Same budget shape, every entry replaced by `power`.
inline PowerBudget with_power(const PowerBudget& shape, double power) {
  return PowerBudget(shape.mode(), std::vector<double>(shape.values().size(), power));
}

/// Draws every entry of every h(k, j) i.i.d. CN(0, 1).
inline ChannelSet generate_iid(Index users, Index antennas, std::uint64_t seed, double noise_variance = 1.0) {
  if (users < 1 || antennas < 1) throw PreconditionError("generate_iid needs K >= 1 and M >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
  std::vector<std::vector<CVector>> h(static_cast<std::size_t>(users));
  for (auto& row : h) {
    row.resize(static_cast<std::size_t>(users));
    for (auto& v : row) {
      v.resize(antennas);
      for (Index m = 0; m < antennas; ++m) {
        const double re = normal(rng);
        const double im = normal(rng);
        v(m) = Complex(re, im);
      }
    }
  }
  return ChannelSet(users, antennas, std::move(h), noise_variance);
}

namespace detail {

inline CVector polar_row(std::initializer_list<std::pair<double, double>> entries) {
  CVector v(static_cast<Index>(entries.size()));
  Index m = 0;
  for (const auto& [mag, phase] : entries) v(m++) = std::polar(mag, phase);
  return v;
}

}  // namespace detail

inline const std::vector<std::string>& fixture_names() {
  static const std::vector<std::string> names{"H1", "H2", "BC-FIG6"};
  return names;
}

/// Fixed reference channel realizations (two-user, M = 2). Budgets are per transmitter (broadcast: sum) at 10 dB.
inline std::pair<ChannelSet, PowerBudget> fixture(const std::string& name) {
  using detail::polar_row;
  const double p10 = snr_db_to_power(10.0);
  if (name == "H1" || name == "H2") {
    const bool first = name == "H1";
    CVector h11 = polar_row({{0.3676, -1.7037}, {0.4993, 1.6076}});
    CVector h21 = polar_row({{0.2526, -1.8997}, {0.3270, first ? 1.5884 : -0.3810}});
    CVector h22 = polar_row({{0.4694, -0.1915}, {0.5682, 0.5302}});
    CVector h12 = polar_row({{0.2885, -0.2454}, {0.3656, first ? 0.4710 : 1.8673}});
    std::vector<std::vector<CVector>> h{{h11, h12}, {h21, h22}};
    return {ChannelSet(2, 2, std::move(h), 1.0), PowerBudget::per_transmitter(2, p10)};
  }
  if (name == "BC-FIG6") {
    CVector h1 = polar_row({{1.1741, 1.0030}, {0.8064, 2.8642}});
    CVector h2 = polar_row({{1.8116, 2.0647}, {0.9209, -2.4167}});
    return {ChannelSet::broadcast({h1, h2}, 1.0), PowerBudget::sum_power(p10)};
  }
  std::string known;
  for (const auto& n : fixture_names()) known += (known.empty() ? "" : ", ") + n;
  throw FixtureNotFound("unknown fixture '" + name + "' (available: " + known + ")");
}

// ---------------------------------------------------------------------------------------------
// JSON persistence
// ---------------------------------------------------------------------------------------------

inline nlohmann::json to_json(const ChannelSet& ch, const PowerBudget& power) {
  using nlohmann::json;
  json h = json::array();
  json polar = json::array();
  for (Index k = 0; k < ch.users(); ++k) {
    json row = json::array();
    json prow = json::array();
    for (Index j = 0; j < ch.users(); ++j) {
      json vec = json::array();
      json pvec = json::array();
      for (Index m = 0; m < ch.antennas(); ++m) {
        const Complex v = ch.h(k, j)(m);
        vec.push_back({v.real(), v.imag()});
        pvec.push_back({std::abs(v), std::arg(v)});
      }
      row.push_back(std::move(vec));
      prow.push_back(std::move(pvec));
    }
    h.push_back(std::move(row));
    polar.push_back(std::move(prow));
  }
  return json{{"K", ch.users()},
              {"M", ch.antennas()},
              {"topology", ch.topology() == Topology::BroadcastChannel ? "bc" : "ic"},
              {"noise_variance", ch.noise_variance()},
              {"h", std::move(h)},
              {"h_polar", std::move(polar)},
              {"power",
               {{"mode", power.mode() == PowerMode::SumPower ? "sum" : "per_tx"}, {"values", power.values()}}}};
}

namespace detail {

inline const nlohmann::json& require(const nlohmann::json& obj, const std::string& key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) throw ParseError(where + ": missing field '" + key + "'");
  return obj.at(key);
}

inline double number(const nlohmann::json& v, const std::string& where) {
  if (!v.is_number()) throw ParseError(where + ": expected a number");
  return v.get<double>();
}

inline Index integer(const nlohmann::json& v, const std::string& where) {
  if (!v.is_number_integer()) throw ParseError(where + ": expected an integer");
  return v.get<Index>();
}

}  // namespace detail

/// Inverse of to_json. Rectangular parts are authoritative; "h_polar" is informational and ignored.
inline std::pair<ChannelSet, PowerBudget> from_json(const nlohmann::json& doc) {
  using detail::integer;
  using detail::number;
  using detail::require;
  const Index users = integer(require(doc, "K", "channel file"), "K");
  const Index antennas = integer(require(doc, "M", "channel file"), "M");
  if (users < 1 || antennas < 1) throw InvariantViolation("K and M must be at least 1");
  const auto& topo = require(doc, "topology", "channel file");
  if (!topo.is_string() || (topo != "ic" && topo != "bc")) throw ParseError("topology: expected \"ic\" or \"bc\"");
  const double noise = number(require(doc, "noise_variance", "channel file"), "noise_variance");

  const auto& h = require(doc, "h", "channel file");
  if (!h.is_array()) throw ParseError("h: expected an array");
  if (static_cast<Index>(h.size()) != users)
    throw DimensionMismatch("h: K=" + std::to_string(users) + " but " + std::to_string(h.size()) + " rows");
  std::vector<std::vector<CVector>> rows(static_cast<std::size_t>(users));
  for (Index k = 0; k < users; ++k) {
    const auto& row = h[static_cast<std::size_t>(k)];
    const std::string rk = "h[" + std::to_string(k) + "]";
    if (!row.is_array()) throw ParseError(rk + ": expected an array");
    if (static_cast<Index>(row.size()) != users)
      throw DimensionMismatch(rk + ": expected " + std::to_string(users) + " entries, got " +
                              std::to_string(row.size()));
    for (Index j = 0; j < users; ++j) {
      const auto& vec = row[static_cast<std::size_t>(j)];
      const std::string rj = rk + "[" + std::to_string(j) + "]";
      if (!vec.is_array()) throw ParseError(rj + ": expected an array");
      if (static_cast<Index>(vec.size()) != antennas)
        throw DimensionMismatch(rj + ": expected " + std::to_string(antennas) + " antennas, got " +
                                std::to_string(vec.size()));
      CVector v(antennas);
      for (Index m = 0; m < antennas; ++m) {
        const auto& e = vec[static_cast<std::size_t>(m)];
        const std::string rm = rj + "[" + std::to_string(m) + "]";
        if (!e.is_array() || e.size() != 2) throw ParseError(rm + ": expected [re, im]");
        v(m) = Complex(number(e[0], rm + "[0]"), number(e[1], rm + "[1]"));
      }
      rows[static_cast<std::size_t>(k)].push_back(std::move(v));
    }
  }
  const Topology topology = topo == "bc" ? Topology::BroadcastChannel : Topology::InterferenceChannel;
  ChannelSet ch(users, antennas, std::move(rows), noise, topology);

  const auto& pw = require(doc, "power", "channel file");
  const auto& mode = require(pw, "mode", "power");
  if (!mode.is_string() || (mode != "per_tx" && mode != "sum"))
    throw ParseError("power.mode: expected \"per_tx\" or \"sum\"");
  const auto& vals = require(pw, "values", "power");
  if (!vals.is_array()) throw ParseError("power.values: expected an array");
  std::vector<double> values;
  for (std::size_t i = 0; i < vals.size(); ++i)
    values.push_back(number(vals[i], "power.values[" + std::to_string(i) + "]"));
  PowerBudget power(mode == "sum" ? PowerMode::SumPower : PowerMode::PerTransmitter, std::move(values));
  power.check_users(users);
  return {std::move(ch), std::move(power)};
}

/// Parses channel JSON text; syntax errors carry the line and column.
inline std::pair<ChannelSet, PowerBudget> parse_channels(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    std::size_t line = 1;
    std::size_t col = 1;
    for (std::size_t i = 0; i < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ParseError("line " + std::to_string(line) + ", column " + std::to_string(col) + ": " + e.what());
  }
  return from_json(doc);
}

inline std::pair<ChannelSet, PowerBudget> load_channels(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open channel file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_channels(buf.str());
}

inline void save_channels(const std::string& path, const ChannelSet& ch, const PowerBudget& power) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write channel file '" + path + "'");
  out << to_json(ch, power).dump(2) << '\n';
}

}  // namespace igs
