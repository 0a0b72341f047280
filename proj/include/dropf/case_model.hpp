#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace dropf {

class CaseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Lexical or row-level problem in a case file; carries the 1-based position.
class ParseError : public CaseError {
 public:
  ParseError(int line, int col, const std::string& message)
      : CaseError("line " + std::to_string(line) + ", col " + std::to_string(col) + ": " +
                  message),
        line_(line),
        col_(col) {}

  int line() const { return line_; }
  int column() const { return col_; }

 private:
  int line_;
  int col_;
};

class ValidationError : public CaseError {
 public:
  using CaseError::CaseError;
};

class UnsupportedFeatureError : public CaseError {
 public:
  using CaseError::CaseError;
};

enum class BusKind { slack, pv, pq };

struct Bus {
  int id = 0;
  BusKind kind = BusKind::pq;
  double base_pd = 0.0;   ///< MW
  double base_qd = 0.0;   ///< MVAr
  double vmin = 0.94;     ///< p.u.
  double vmax = 1.06;     ///< p.u.
  double shunt_gs = 0.0;  ///< MW consumed at |V| = 1.0 p.u.
  double shunt_bs = 0.0;  ///< MVAr injected at |V| = 1.0 p.u.

  friend bool operator==(const Bus&, const Bus&) = default;
};

struct Branch {
  int from_bus = 0;
  int to_bus = 0;
  double r = 0.0;           ///< p.u. series resistance
  double x = 0.0;           ///< p.u. series reactance
  double b_charging = 0.0;  ///< p.u. total line-charging susceptance
  double tap_ratio = 1.0;   ///< off-nominal turns ratio, 1.0 if none
  double s_max = 0.0;       ///< MVA rating, 0 = unlimited

  friend bool operator==(const Branch&, const Branch&) = default;
};

struct Generator {
  int bus = 0;
  double pmin = 0.0;    ///< MW
  double pmax = 0.0;    ///< MW
  double qmin = 0.0;    ///< MVAr
  double qmax = 0.0;    ///< MVAr
  double cost_a = 0.0;  ///< $/MW^2 h
  double cost_b = 0.0;  ///< $/MWh
  double cost_c = 0.0;  ///< $/h
  double vg = 1.0;      ///< scheduled voltage, p.u. (power-flow control data)
  double pg0 = 0.0;     ///< scheduled output, MW (power-flow control data)

  friend bool operator==(const Generator&, const Generator&) = default;
};

// Static grid description. Immutable once validated; safe to share across threads.
struct NetworkCase {
  double base_mva = 100.0;
  std::vector<Bus> buses;
  std::vector<Branch> branches;
  std::vector<Generator> generators;

  int bus_index(int bus_id) const;  ///< position in `buses`, -1 if absent
  int slack_index() const;
  std::vector<int> generators_at(int bus_id) const;
  double total_base_pd() const;  ///< MW

  // Checks every structural invariant (unique ids, one slack, referential
  // integrity, bound ordering, nonzero impedances, single island).
  void validate() const;

  friend bool operator==(const NetworkCase&, const NetworkCase&) = default;
};

// Parses the MATPOWER matrix-literal subset (baseMVA, bus, gen, branch,
// gencost sections; % comments and ... continuations tolerated) and returns
// a validated NetworkCase.
NetworkCase parse_case(const std::string& text);

NetworkCase load_case_file(const std::string& path);

// Emits case-file text that parses back to an identical NetworkCase.
std::string serialize_case(const NetworkCase& net);

}  // namespace dropf
