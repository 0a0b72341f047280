#include "dropf/case_model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <vector>

namespace dropf {

namespace {

struct Token {
  enum Kind { Number, Ident, Punct, Str, Newline, End };
  Kind kind = End;
  std::string text;
  double value = 0.0;
  int line = 1;
  int col = 1;
};

class Lexer {
 public:
  explicit Lexer(const std::string& src) : src_(src) {}

  Token next() {
    skip_blanks();
    Token t;
    t.line = line_;
    t.col = col_;
    if (pos_ >= src_.size()) {
      t.kind = Token::End;
      return t;
    }
    char c = src_[pos_];
    if (c == '\n') {
      advance();
      t.kind = Token::Newline;
      return t;
    }
    if (c == '\'') {
      advance();
      std::string s;
      while (pos_ < src_.size() && src_[pos_] != '\'' && src_[pos_] != '\n') {
        s.push_back(src_[pos_]);
        advance();
      }
      if (pos_ >= src_.size() || src_[pos_] != '\'')
        throw ParseError(t.line, t.col, "unterminated string literal");
      advance();
      t.kind = Token::Str;
      t.text = std::move(s);
      return t;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.' || c == '+' || c == '-') {
      return lex_number(t);
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::string s;
      while (pos_ < src_.size()) {
        char d = src_[pos_];
        if (std::isalnum(static_cast<unsigned char>(d)) || d == '_' || d == '.') {
          s.push_back(d);
          advance();
        } else {
          break;
        }
      }
      t.kind = Token::Ident;
      t.text = std::move(s);
      return t;
    }
    if (c == '=' || c == '[' || c == ']' || c == ';' || c == ',' || c == '{' || c == '}' ||
        c == '(' || c == ')') {
      advance();
      t.kind = Token::Punct;
      t.text = std::string(1, c);
      return t;
    }
    throw ParseError(line_, col_, std::string("unexpected character '") + c + "'");
  }

 private:
  void advance() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void skip_blanks() {
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (c == ' ' || c == '\t' || c == '\r') {
        advance();
      } else if (c == '%') {
        while (pos_ < src_.size() && src_[pos_] != '\n') advance();
      } else if (c == '.' && pos_ + 2 < src_.size() && src_[pos_ + 1] == '.' &&
                 src_[pos_ + 2] == '.') {
        // line continuation: swallow through the newline
        while (pos_ < src_.size() && src_[pos_] != '\n') advance();
        if (pos_ < src_.size()) advance();
      } else {
        break;
      }
    }
  }

  Token lex_number(Token t) {
    size_t start = pos_;
    if (src_[pos_] == '+' || src_[pos_] == '-') advance();
    bool any_digit = false;
    while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
      advance();
      any_digit = true;
    }
    if (pos_ < src_.size() && src_[pos_] == '.') {
      advance();
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
        advance();
        any_digit = true;
      }
    }
    if (!any_digit) throw ParseError(t.line, t.col, "malformed number");
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      size_t mark = pos_;
      advance();
      if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) advance();
      bool exp_digit = false;
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
        advance();
        exp_digit = true;
      }
      if (!exp_digit) {
        pos_ = mark;  // 'e' belonged to something else; leave it
      }
    }
    std::string_view text(src_.data() + start, pos_ - start);
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size())
      throw ParseError(t.line, t.col, "malformed number '" + std::string(text) + "'");
    t.kind = Token::Number;
    t.text = std::string(text);
    t.value = value;
    return t;
  }

  const std::string& src_;
  size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

struct Row {
  std::vector<double> vals;
  int line = 0;
  int col = 0;
};

struct RawCase {
  std::optional<double> base_mva;
  std::map<std::string, std::vector<Row>> matrices;
  int end_line = 1;
};

class CaseReader {
 public:
  explicit CaseReader(const std::string& text) : lex_(text) { bump(); }

  RawCase read() {
    RawCase raw;
    while (tok_.kind != Token::End) {
      if (tok_.kind == Token::Newline || (tok_.kind == Token::Punct && tok_.text == ";")) {
        bump();
        continue;
      }
      if (tok_.kind == Token::Ident && tok_.text == "function") {
        while (tok_.kind != Token::Newline && tok_.kind != Token::End) bump();
        continue;
      }
      if (tok_.kind != Token::Ident)
        throw ParseError(tok_.line, tok_.col, "expected an assignment, got '" + tok_.text + "'");
      std::string name = canonical(tok_.text);
      bump();
      expect_punct("=");
      read_value(raw, name);
    }
    raw.end_line = tok_.line;
    return raw;
  }

 private:
  void bump() { tok_ = lex_.next(); }

  void expect_punct(const std::string& p) {
    if (tok_.kind != Token::Punct || tok_.text != p)
      throw ParseError(tok_.line, tok_.col, "expected '" + p + "', got '" + tok_.text + "'");
    bump();
  }

  static std::string canonical(const std::string& name) {
    if (name.rfind("mpc.", 0) == 0) return name.substr(4);
    return name;
  }

  void read_value(RawCase& raw, const std::string& name) {
    if (tok_.kind == Token::Number) {
      if (name == "baseMVA") {
        if (raw.base_mva) throw ParseError(tok_.line, tok_.col, "duplicate baseMVA");
        raw.base_mva = tok_.value;
      }
      bump();
    } else if (tok_.kind == Token::Str) {
      bump();  // e.g. mpc.version = '2'
    } else if (tok_.kind == Token::Punct && tok_.text == "[") {
      std::vector<Row> rows = read_matrix();
      if (is_section(name)) {
        if (raw.matrices.count(name))
          throw ParseError(tok_.line, tok_.col, "duplicate section '" + name + "'");
        raw.matrices.emplace(name, std::move(rows));
      }
    } else if (tok_.kind == Token::Punct && tok_.text == "{") {
      skip_braced();  // cell arrays (bus_name and the like) are ignored
    } else {
      throw ParseError(tok_.line, tok_.col, "expected a value after '='");
    }
    if (tok_.kind == Token::Punct && tok_.text == ";") bump();
  }

  static bool is_section(const std::string& name) {
    return name == "bus" || name == "gen" || name == "branch" || name == "gencost";
  }

  std::vector<Row> read_matrix() {
    expect_punct("[");
    std::vector<Row> rows;
    Row current;
    auto flush = [&] {
      if (!current.vals.empty()) rows.push_back(std::move(current));
      current = Row{};
    };
    while (true) {
      if (tok_.kind == Token::End)
        throw ParseError(tok_.line, tok_.col, "unterminated matrix (missing ']')");
      if (tok_.kind == Token::Punct && tok_.text == "]") {
        flush();
        bump();
        return rows;
      }
      if (tok_.kind == Token::Newline || (tok_.kind == Token::Punct && tok_.text == ";")) {
        flush();
        bump();
        continue;
      }
      if (tok_.kind == Token::Punct && tok_.text == ",") {
        bump();
        continue;
      }
      if (tok_.kind != Token::Number)
        throw ParseError(tok_.line, tok_.col,
                         "expected a number in matrix, got '" + tok_.text + "'");
      if (current.vals.empty()) {
        current.line = tok_.line;
        current.col = tok_.col;
      }
      current.vals.push_back(tok_.value);
      bump();
    }
  }

  void skip_braced() {
    int depth = 0;
    while (true) {
      if (tok_.kind == Token::End)
        throw ParseError(tok_.line, tok_.col, "unterminated '{'");
      if (tok_.kind == Token::Punct && tok_.text == "{") ++depth;
      if (tok_.kind == Token::Punct && tok_.text == "}") {
        --depth;
        if (depth == 0) {
          bump();
          return;
        }
      }
      bump();
    }
  }

  Lexer lex_;
  Token tok_;
};

int to_int(double v, const Row& row, const std::string& what) {
  double r = std::round(v);
  if (std::abs(v - r) > 1e-9 || std::abs(v) > 2e9)
    throw ParseError(row.line, row.col, what + " must be an integer, got " + std::to_string(v));
  return static_cast<int>(r);
}

const std::vector<Row>& section(const RawCase& raw, const std::string& name) {
  auto it = raw.matrices.find(name);
  if (it == raw.matrices.end())
    throw ParseError(raw.end_line, 1, "missing required section '" + name + "'");
  return it->second;
}

void need_columns(const Row& row, size_t n, const std::string& what) {
  if (row.vals.size() < n)
    throw ParseError(row.line, row.col,
                     what + " row needs at least " + std::to_string(n) + " columns, got " +
                         std::to_string(row.vals.size()));
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

int NetworkCase::bus_index(int bus_id) const {
  for (size_t i = 0; i < buses.size(); ++i)
    if (buses[i].id == bus_id) return static_cast<int>(i);
  return -1;
}

int NetworkCase::slack_index() const {
  for (size_t i = 0; i < buses.size(); ++i)
    if (buses[i].kind == BusKind::slack) return static_cast<int>(i);
  return -1;
}

std::vector<int> NetworkCase::generators_at(int bus_id) const {
  std::vector<int> out;
  for (size_t i = 0; i < generators.size(); ++i)
    if (generators[i].bus == bus_id) out.push_back(static_cast<int>(i));
  return out;
}

double NetworkCase::total_base_pd() const {
  double s = 0.0;
  for (const auto& b : buses) s += b.base_pd;
  return s;
}

void NetworkCase::validate() const {
  if (base_mva <= 0) throw ValidationError("baseMVA must be positive");
  if (buses.empty()) throw ValidationError("case has no buses");

  std::map<int, int> index;
  int slack_count = 0;
  for (size_t i = 0; i < buses.size(); ++i) {
    const Bus& b = buses[i];
    if (!index.emplace(b.id, static_cast<int>(i)).second)
      throw ValidationError("duplicate bus id " + std::to_string(b.id));
    if (b.kind == BusKind::slack) ++slack_count;
    if (!(b.vmin > 0))
      throw ValidationError("bus " + std::to_string(b.id) + ": vmin must be positive");
    if (!(b.vmin <= b.vmax))
      throw ValidationError("bus " + std::to_string(b.id) + ": vmin exceeds vmax");
  }
  if (slack_count == 0) throw ValidationError("no slack bus");
  if (slack_count > 1) throw ValidationError("multiple slack buses");

  for (size_t i = 0; i < branches.size(); ++i) {
    const Branch& br = branches[i];
    std::string tag = "branch " + std::to_string(i + 1) + " (" + std::to_string(br.from_bus) +
                      "-" + std::to_string(br.to_bus) + ")";
    if (!index.count(br.from_bus))
      throw ValidationError(tag + ": unknown bus reference " + std::to_string(br.from_bus));
    if (!index.count(br.to_bus))
      throw ValidationError(tag + ": unknown bus reference " + std::to_string(br.to_bus));
    if (br.from_bus == br.to_bus) throw ValidationError(tag + ": endpoints must differ");
    if (br.r == 0.0 && br.x == 0.0) throw ValidationError(tag + ": zero impedance");
    if (br.s_max < 0) throw ValidationError(tag + ": negative rating");
    if (!(br.tap_ratio > 0)) throw ValidationError(tag + ": tap ratio must be positive");
  }

  for (size_t i = 0; i < generators.size(); ++i) {
    const Generator& g = generators[i];
    std::string tag = "generator " + std::to_string(i + 1);
    if (!index.count(g.bus))
      throw ValidationError(tag + ": unknown bus reference " + std::to_string(g.bus));
    if (!(g.pmin <= g.pmax)) throw ValidationError(tag + ": pmin exceeds pmax");
    if (!(g.qmin <= g.qmax)) throw ValidationError(tag + ": qmin exceeds qmax");
    if (g.cost_a < 0) throw ValidationError(tag + ": negative quadratic cost coefficient");
  }

  for (const Bus& b : buses) {
    if (b.kind == BusKind::pq) continue;
    if (generators_at(b.id).empty())
      throw ValidationError("bus " + std::to_string(b.id) +
                            " is slack/pv but has no generator");
  }

  // single-island check
  std::vector<char> seen(buses.size(), 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  while (!stack.empty()) {
    int n = stack.back();
    stack.pop_back();
    for (const Branch& br : branches) {
      int f = index.at(br.from_bus), t = index.at(br.to_bus);
      if (f == n && !seen[t]) {
        seen[t] = 1;
        stack.push_back(t);
      } else if (t == n && !seen[f]) {
        seen[f] = 1;
        stack.push_back(f);
      }
    }
  }
  for (size_t i = 0; i < buses.size(); ++i)
    if (!seen[i])
      throw ValidationError("network is not a single island (bus " +
                            std::to_string(buses[i].id) + " unreachable)");
}

NetworkCase parse_case(const std::string& text) {
  RawCase raw = CaseReader(text).read();

  NetworkCase net;
  if (!raw.base_mva) throw ParseError(raw.end_line, 1, "missing required section 'baseMVA'");
  net.base_mva = *raw.base_mva;
  if (!(net.base_mva > 0)) throw ValidationError("baseMVA must be positive");

  for (const Row& row : section(raw, "bus")) {
    need_columns(row, 13, "bus");
    Bus b;
    b.id = to_int(row.vals[0], row, "bus id");
    int type = to_int(row.vals[1], row, "bus type");
    switch (type) {
      case 1: b.kind = BusKind::pq; break;
      case 2: b.kind = BusKind::pv; break;
      case 3: b.kind = BusKind::slack; break;
      case 4:
        throw UnsupportedFeatureError("bus " + std::to_string(b.id) +
                                      ": isolated buses (type 4) are not supported");
      default:
        throw ParseError(row.line, row.col, "invalid bus type " + std::to_string(type));
    }
    b.base_pd = row.vals[2];
    b.base_qd = row.vals[3];
    b.shunt_gs = row.vals[4];
    b.shunt_bs = row.vals[5];
    b.vmax = row.vals[11];
    b.vmin = row.vals[12];
    net.buses.push_back(b);
  }

  const auto& gen_rows = section(raw, "gen");
  const auto& cost_rows = section(raw, "gencost");
  if (cost_rows.size() == 2 * gen_rows.size() && !gen_rows.empty())
    throw UnsupportedFeatureError("reactive-power cost rows are not supported");
  if (cost_rows.size() != gen_rows.size())
    throw ValidationError("gencost has " + std::to_string(cost_rows.size()) +
                          " rows for " + std::to_string(gen_rows.size()) + " generators");

  for (size_t i = 0; i < gen_rows.size(); ++i) {
    const Row& row = gen_rows[i];
    need_columns(row, 10, "gen");
    int status = to_int(row.vals[7], row, "gen status");
    if (status == 0) continue;  // out-of-service units are dropped

    Generator g;
    g.bus = to_int(row.vals[0], row, "gen bus");
    g.pg0 = row.vals[1];
    g.qmax = row.vals[3];
    g.qmin = row.vals[4];
    g.vg = row.vals[5];
    g.pmax = row.vals[8];
    g.pmin = row.vals[9];

    const Row& cost = cost_rows[i];
    need_columns(cost, 4, "gencost");
    int model = to_int(cost.vals[0], cost, "cost model");
    if (model == 1)
      throw UnsupportedFeatureError("piecewise-linear generator costs are not supported");
    if (model != 2)
      throw ParseError(cost.line, cost.col, "invalid cost model " + std::to_string(model));
    int ncost = to_int(cost.vals[3], cost, "cost term count");
    if (ncost != 3)
      throw UnsupportedFeatureError("only 3-coefficient quadratic costs are supported, got " +
                                    std::to_string(ncost) + " terms");
    need_columns(cost, 7, "gencost");
    g.cost_a = cost.vals[4];
    g.cost_b = cost.vals[5];
    g.cost_c = cost.vals[6];
    net.generators.push_back(g);
  }

  for (const Row& row : section(raw, "branch")) {
    need_columns(row, 11, "branch");
    Branch br;
    int status = to_int(row.vals[10], row, "branch status");
    if (status == 0) continue;
    br.from_bus = to_int(row.vals[0], row, "branch from bus");
    br.to_bus = to_int(row.vals[1], row, "branch to bus");
    br.r = row.vals[2];
    br.x = row.vals[3];
    br.b_charging = row.vals[4];
    br.s_max = row.vals[5];
    if (row.vals[9] != 0.0)
      throw UnsupportedFeatureError("phase-shifting transformers are not supported");
    br.tap_ratio = row.vals[8] == 0.0 ? 1.0 : row.vals[8];
    net.branches.push_back(br);
  }

  net.validate();
  return net;
}

NetworkCase load_case_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CaseError("cannot open case file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_case(ss.str());
}

std::string serialize_case(const NetworkCase& net) {
  std::ostringstream os;
  os << "function mpc = case_export\n";
  os << "mpc.version = '2';\n\n";
  os << "mpc.baseMVA = " << fmt(net.base_mva) << ";\n\n";

  os << "%% bus_i type Pd Qd Gs Bs area Vm Va baseKV zone Vmax Vmin\n";
  os << "mpc.bus = [\n";
  for (const Bus& b : net.buses) {
    int type = b.kind == BusKind::slack ? 3 : (b.kind == BusKind::pv ? 2 : 1);
    os << "\t" << b.id << "\t" << type << "\t" << fmt(b.base_pd) << "\t" << fmt(b.base_qd)
       << "\t" << fmt(b.shunt_gs) << "\t" << fmt(b.shunt_bs) << "\t1\t1\t0\t0\t1\t"
       << fmt(b.vmax) << "\t" << fmt(b.vmin) << ";\n";
  }
  os << "];\n\n";

  os << "%% bus Pg Qg Qmax Qmin Vg mBase status Pmax Pmin\n";
  os << "mpc.gen = [\n";
  for (const Generator& g : net.generators) {
    os << "\t" << g.bus << "\t" << fmt(g.pg0) << "\t0\t" << fmt(g.qmax) << "\t" << fmt(g.qmin)
       << "\t" << fmt(g.vg) << "\t" << fmt(net.base_mva) << "\t1\t" << fmt(g.pmax) << "\t"
       << fmt(g.pmin) << ";\n";
  }
  os << "];\n\n";

  os << "%% fbus tbus r x b rateA rateB rateC ratio angle status angmin angmax\n";
  os << "mpc.branch = [\n";
  for (const Branch& br : net.branches) {
    os << "\t" << br.from_bus << "\t" << br.to_bus << "\t" << fmt(br.r) << "\t" << fmt(br.x)
       << "\t" << fmt(br.b_charging) << "\t" << fmt(br.s_max) << "\t0\t0\t"
       << fmt(br.tap_ratio) << "\t0\t1\t-360\t360;\n";
  }
  os << "];\n\n";

  os << "%% model startup shutdown n c2 c1 c0\n";
  os << "mpc.gencost = [\n";
  for (const Generator& g : net.generators) {
    os << "\t2\t0\t0\t3\t" << fmt(g.cost_a) << "\t" << fmt(g.cost_b) << "\t" << fmt(g.cost_c)
       << ";\n";
  }
  os << "];\n";
  return os.str();
}

}  // namespace dropf
