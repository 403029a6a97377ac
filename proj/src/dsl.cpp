#include "riskforge/dsl.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include "riskforge/validate.hpp"

namespace riskforge::dsl {

namespace {

std::string join(const std::vector<std::string>& items, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += items[i];
  }
  return out;
}

std::string error_text(const SourceSpan& span, const std::string& message, const std::vector<std::string>& expected) {
  std::string s = span.file + ":" + std::to_string(span.line) + ":" + std::to_string(span.column) + ": " + message;
  if (!expected.empty()) s += " (expected " + join(expected, ", ") + ")";
  return s;
}

// ---------------------------------------------------------------- lexer

enum class Tok { Ident, Number, String, Punct, End };

struct Token {
  Tok kind = Tok::End;
  std::string text;
  double number = 0.0;
  int line = 1;
  int column = 1;
};

std::string describe(const Token& t) {
  switch (t.kind) {
    case Tok::Ident: return "'" + t.text + "'";
    case Tok::Number: return "number " + t.text;
    case Tok::String: return "string";
    case Tok::Punct: return "'" + t.text + "'";
    case Tok::End: return "end of input";
  }
  return "token";
}

bool is_letter(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }
bool is_digit(char c) { return c >= '0' && c <= '9'; }

class Lexer {
 public:
  Lexer(std::string_view text, std::string file) : text_(text), file_(std::move(file)) {}

  const std::string& file() const { return file_; }

  [[noreturn]] void fail(int line, int column, const std::string& message,
                         std::vector<std::string> expected = {}) const {
    throw ParseError(SourceSpan{file_, line, column}, message, std::move(expected));
  }

  Token next() {
    skip_space();
    Token t;
    t.line = line_;
    t.column = col_;
    if (pos_ >= text_.size()) return t;
    const char c = text_[pos_];
    if (is_letter(c)) {
      const std::size_t start = pos_;
      while (pos_ < text_.size() && (is_letter(text_[pos_]) || is_digit(text_[pos_]) || text_[pos_] == '_' ||
                                     text_[pos_] == '-')) {
        advance();
      }
      t.kind = Tok::Ident;
      t.text = std::string(text_.substr(start, pos_ - start));
      return t;
    }
    if (is_digit(c) || c == '.' || ((c == '-' || c == '+') && starts_number(pos_ + 1))) {
      return number(t);
    }
    if (c == '"') return string(t);
    if (c == '<' || c == '>') {
      advance();
      t.kind = Tok::Punct;
      t.text = std::string(1, c);
      if (pos_ < text_.size() && text_[pos_] == '=') {
        advance();
        t.text += '=';
      }
      return t;
    }
    if (std::string_view("{}(),=~/:").find(c) != std::string_view::npos) {
      advance();
      t.kind = Tok::Punct;
      t.text = std::string(1, c);
      return t;
    }
    const auto byte = static_cast<unsigned char>(c);
    std::ostringstream msg;
    if (byte >= 0x20 && byte < 0x7f) msg << "unexpected character '" << c << "'";
    else msg << "unexpected byte 0x" << std::hex << static_cast<int>(byte);
    fail(line_, col_, msg.str());
  }

 private:
  bool starts_number(std::size_t i) const {
    return i < text_.size() && (is_digit(text_[i]) || (text_[i] == '.' && i + 1 < text_.size() && is_digit(text_[i + 1])));
  }

  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void skip_space() {
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
        advance();
      } else if (c == '#') {
        while (pos_ < text_.size() && text_[pos_] != '\n') advance();
      } else {
        break;
      }
    }
  }

  Token number(Token t) {
    const std::size_t start = pos_;
    if (text_[pos_] == '-' || text_[pos_] == '+') advance();
    while (pos_ < text_.size() && is_digit(text_[pos_])) advance();
    if (pos_ < text_.size() && text_[pos_] == '.') {
      advance();
      while (pos_ < text_.size() && is_digit(text_[pos_])) advance();
    }
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t look = pos_ + 1;
      if (look < text_.size() && (text_[look] == '+' || text_[look] == '-')) ++look;
      if (look < text_.size() && is_digit(text_[look])) {
        while (pos_ < look) advance();
        while (pos_ < text_.size() && is_digit(text_[pos_])) advance();
      }
    }
    std::string_view raw = text_.substr(start, pos_ - start);
    t.kind = Tok::Number;
    t.text = std::string(raw);
    // from_chars rejects a leading '+'.
    std::string_view digits = raw.front() == '+' ? raw.substr(1) : raw;
    auto [end, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), t.number);
    if (ec != std::errc() || end != digits.data() + digits.size()) {
      fail(t.line, t.column, "malformed number " + t.text);
    }
    if (pos_ < text_.size() && (is_letter(text_[pos_]) || text_[pos_] == '_')) {
      fail(t.line, t.column, "malformed number " + t.text + text_[pos_]);
    }
    return t;
  }

  Token string(Token t) {
    advance();  // opening quote
    std::string out;
    while (true) {
      if (pos_ >= text_.size() || text_[pos_] == '\n') fail(t.line, t.column, "unterminated string");
      const char c = text_[pos_];
      if (c == '"') {
        advance();
        break;
      }
      if (c == '\\') {
        advance();
        if (pos_ >= text_.size()) fail(t.line, t.column, "unterminated string");
        const char e = text_[pos_];
        switch (e) {
          case '"': out += '"'; break;
          case '\\': out += '\\'; break;
          case 'n': out += '\n'; break;
          case 't': out += '\t'; break;
          default: fail(line_, col_ - 1, std::string("unknown escape \\") + e);
        }
        advance();
        continue;
      }
      out += c;
      advance();
    }
    t.kind = Tok::String;
    t.text = std::move(out);
    return t;
  }

  std::string_view text_;
  std::string file_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

// ---------------------------------------------------------------- parser

const std::vector<std::string> kItemKeywords = {"hazard", "ftree", "etree",  "bowtie", "fmeca", "bnet",
                                                "tolerance", "kri", "dsa", "chain",  "loss"};

struct Value {
  UncertainQuantity quantity;
  bool frequency = false;
};

class Parser {
 public:
  Parser(std::string_view text, std::string file) : lex_(text, std::move(file)) {
    if (text.substr(0, 3) == "\xEF\xBB\xBF") lex_.fail(1, 1, "byte-order mark not allowed");
    cur_ = lex_.next();
  }

  ScenarioModel document() {
    while (cur_.kind != Tok::End) item();
    return std::move(model_);
  }

 private:
  // ---- token helpers

  [[noreturn]] void fail(const Token& at, const std::string& message, std::vector<std::string> expected = {}) {
    lex_.fail(at.line, at.column, message, std::move(expected));
  }

  [[noreturn]] void unexpected(std::vector<std::string> expected) {
    fail(cur_, "unexpected " + describe(cur_), std::move(expected));
  }

  Token take() {
    Token t = std::move(cur_);
    cur_ = lex_.next();
    return t;
  }

  bool at_word(std::string_view w) const { return cur_.kind == Tok::Ident && cur_.text == w; }
  bool at_punct(std::string_view p) const { return cur_.kind == Tok::Punct && cur_.text == p; }

  Token word(std::string_view w) {
    if (!at_word(w)) unexpected({"'" + std::string(w) + "'"});
    return take();
  }

  Token punct(std::string_view p) {
    if (!at_punct(p)) unexpected({"'" + std::string(p) + "'"});
    return take();
  }

  Token ident(const std::string& what = "identifier") {
    if (cur_.kind != Tok::Ident) unexpected({what});
    return take();
  }

  Token number(const std::string& what = "number") {
    if (cur_.kind != Tok::Number) unexpected({what});
    return take();
  }

  int integer(const std::string& what) {
    Token t = number(what);
    if (t.number != static_cast<double>(static_cast<int>(t.number))) fail(t, what + " must be an integer");
    return static_cast<int>(t.number);
  }

  std::string string_lit(const std::string& what = "string") {
    if (cur_.kind != Tok::String) unexpected({what});
    return take().text;
  }

  std::optional<std::string> maybe_string() {
    if (cur_.kind == Tok::String) return take().text;
    return std::nullopt;
  }

  void span(const std::string& location, const Token& at) {
    model_.spans.emplace(location, SourceSpan{lex_.file(), at.line, at.column});
  }

  HarmUnit unit() {
    if (cur_.kind == Tok::Ident) {
      if (auto u = parse_harm_unit(cur_.text)) {
        take();
        return *u;
      }
    }
    std::vector<std::string> names;
    for (HarmUnit u : all_harm_units()) names.emplace_back(to_string(u));
    unexpected(names);
  }

  bool at_unit() const { return cur_.kind == Tok::Ident && parse_harm_unit(cur_.text).has_value(); }

  // ---- quantities

  UncertainQuantity distribution() {
    Token name = ident("distribution name");
    punct("(");
    const auto args = [&](std::size_t lo, std::size_t hi) {
      std::vector<double> v;
      if (!at_punct(")")) {
        v.push_back(number().number);
        while (at_punct(",")) {
          take();
          v.push_back(number().number);
        }
      }
      punct(")");
      if (v.size() < lo || v.size() > hi) {
        const std::string count = lo == hi ? std::to_string(lo) : "at least " + std::to_string(lo);
        fail(name, name.text + " takes " + count + " argument" + (lo == 1 && hi == 1 ? "" : "s"));
      }
      return v;
    };
    const std::string& n = name.text;
    if (n == "point") return UncertainQuantity::point(args(1, 1)[0]);
    if (n == "interval") {
      auto a = args(2, 2);
      return UncertainQuantity::interval(a[0], a[1]);
    }
    if (n == "beta") {
      auto a = args(2, 2);
      return UncertainQuantity::beta(a[0], a[1]);
    }
    if (n == "lognormal") {
      auto a = args(2, 2);
      return UncertainQuantity::lognormal(a[0], a[1]);
    }
    if (n == "triangular") {
      auto a = args(3, 3);
      return UncertainQuantity::triangular(a[0], a[1], a[2]);
    }
    if (n == "empirical") return UncertainQuantity::empirical(args(1, SIZE_MAX));
    if (n == "poisson") return UncertainQuantity::poisson(args(1, 1)[0]);
    if (n == "mixture") {
      std::vector<double> weights;
      std::vector<UncertainQuantity> parts;
      do {
        if (!parts.empty()) take();  // ','
        weights.push_back(number("mixture weight").number);
        punct(":");
        parts.push_back(distribution());
      } while (at_punct(","));
      punct(")");
      return UncertainQuantity::mixture(std::move(weights), std::move(parts));
    }
    fail(name, "unknown distribution " + n,
         {"point", "interval", "beta", "lognormal", "triangular", "empirical", "poisson", "mixture"});
  }

  bool at_value(bool allow_freq) const { return at_word("p") || at_punct("~") || (allow_freq && at_word("freq")); }

  /// p=NUMBER | ~DIST | freq=NUMBER/yr | freq~DIST, then an optional source string.
  Value value(bool allow_freq) {
    Value v;
    if (at_word("p")) {
      take();
      punct("=");
      v.quantity = UncertainQuantity::point(number("probability").number);
    } else if (at_punct("~")) {
      take();
      v.quantity = distribution();
    } else if (allow_freq && at_word("freq")) {
      take();
      v.frequency = true;
      if (at_punct("~")) {
        take();
        v.quantity = distribution();
      } else {
        punct("=");
        v.quantity = UncertainQuantity::point(number("rate").number);
        punct("/");
        word("yr");
      }
    } else {
      std::vector<std::string> expected{"'p='", "'~'"};
      if (allow_freq) expected.emplace_back("'freq='");
      unexpected(expected);
    }
    if (auto source = maybe_string()) v.quantity = v.quantity.with_provenance(*source);
    return v;
  }

  /// "=NUMBER" or "~DIST" after a field keyword.
  UncertainQuantity field_quantity() {
    if (at_punct("=")) {
      take();
      return UncertainQuantity::point(number().number);
    }
    if (at_punct("~")) {
      take();
      return distribution();
    }
    unexpected({"'='", "'~'"});
  }

  // ---- items

  void item() {
    if (cur_.kind != Tok::Ident) unexpected(kItemKeywords);
    const std::string& k = cur_.text;
    if (k == "hazard") return hazard();
    if (k == "ftree") return ftree();
    if (k == "etree") return etree();
    if (k == "bowtie") return bowtie();
    if (k == "fmeca") return fmeca();
    if (k == "bnet") return bnet();
    if (k == "tolerance") return tolerance();
    if (k == "kri") return kri();
    if (k == "dsa") return dsa();
    if (k == "chain") return chain();
    if (k == "loss") return loss();
    unexpected(kItemKeywords);
  }

  void hazard() {
    Token kw = take();
    Hazard h;
    h.id = ident("hazard id").text;
    h.description = string_lit("description");
    span("hazard:" + h.id, kw);
    model_.hazards.push_back(std::move(h));
  }

  void ftree() {
    Token kw = take();
    FaultTree ft;
    ft.id = ident("fault tree id").text;
    span("ftree:" + ft.id, kw);
    std::map<std::string, std::size_t> events;
    gate(ft, events);
    model_.fault_trees.push_back(std::move(ft));
  }

  std::size_t gate(FaultTree& ft, std::map<std::string, std::size_t>& events) {
    GateKind kind;
    if (at_word("and")) kind = GateKind::And;
    else if (at_word("or")) kind = GateKind::Or;
    else unexpected({"'and'", "'or'"});
    take();
    const std::size_t mine = ft.gates.size();
    ft.gates.push_back(Gate{kind, {}});
    punct("{");
    do {
      if (at_word("and") || at_word("or")) {
        const std::size_t child = gate(ft, events);
        ft.gates[mine].children.push_back(NodeRef::gate(child));
      } else if (at_word("event")) {
        take();
        Token id = ident("event id");
        std::optional<Value> v;
        if (at_value(true)) v = value(true);
        auto [it, fresh] = events.emplace(id.text, ft.events.size());
        if (fresh) {
          ft.events.push_back(BasicEvent{id.text, std::nullopt, false});
          span("ftree:" + ft.id + "/event:" + id.text, id);
        }
        BasicEvent& e = ft.events[it->second];
        if (v) {
          if (e.quantity && (!(*e.quantity == v->quantity) || e.frequency != v->frequency)) {
            fail(id, "event " + id.text + " is repeated with a different value");
          }
          e.quantity = v->quantity;
          e.frequency = v->frequency;
        }
        ft.gates[mine].children.push_back(NodeRef::event(it->second));
      } else {
        unexpected({"'event'", "'and'", "'or'"});
      }
    } while (!at_punct("}"));
    take();
    return mine;
  }

  void etree() {
    Token kw = take();
    EventTree et;
    et.id = ident("event tree id").text;
    span("etree:" + et.id, kw);
    if (at_word("init")) {
      take();
      Value v = value(true);
      et.initiator = Initiator{v.quantity, v.frequency};
    }
    if (!at_word("branch")) unexpected(et.initiator ? std::vector<std::string>{"'branch'"}
                                                    : std::vector<std::string>{"'init'", "'branch'"});
    branch(et);
    model_.event_trees.push_back(std::move(et));
  }

  std::size_t branch(EventTree& et) {
    word("branch");
    Token cond = ident("condition id");
    Value v = value(false);
    const std::size_t mine = et.nodes.size();
    et.nodes.push_back(BranchNode{cond.text, v.quantity, std::size_t{0}, std::size_t{0}});
    span("etree:" + et.id + "/branch:" + cond.text, cond);
    punct("{");
    BranchChild success = arm(et);
    et.nodes[mine].on_success = std::move(success);
    BranchChild failure = arm(et);
    et.nodes[mine].on_failure = std::move(failure);
    if (!at_punct("}")) fail(cur_, "a branch has exactly two arms: success, then failure", {"'}'"});
    take();
    return mine;
  }

  BranchChild arm(EventTree& et) {
    if (at_word("branch")) return branch(et);
    if (!at_word("outcome")) unexpected({"'branch'", "'outcome'"});
    take();
    Token id = ident("outcome id");
    word("severity");
    punct("=");
    Token mag = number("severity");
    if (mag.number < 0.0) fail(mag, "severity must be non-negative");
    const HarmUnit u = unit();
    span("etree:" + et.id + "/outcome:" + id.text, id);
    return OutcomeLeaf{id.text, SeverityValue(mag.number, u)};
  }

  void bowtie() {
    Token kw = take();
    BowTie b;
    b.id = ident("bow-tie id").text;
    word("event");
    b.critical_event = ident("critical event id").text;
    word("causes");
    b.fault_tree = ident("fault tree id").text;
    word("consequences");
    b.event_tree = ident("event tree id").text;
    if (at_word("hazard")) {
      take();
      b.hazard = ident("hazard id").text;
    }
    span("bowtie:" + b.id, kw);
    model_.bowties.push_back(std::move(b));
  }

  void fmeca() {
    Token kw = take();
    FmecaWorksheet w;
    w.id = ident("worksheet id").text;
    span("fmeca:" + w.id, kw);
    punct("{");
    while (!at_punct("}")) {
      if (!at_word("mode")) unexpected({"'mode'", "'}'"});
      take();
      FmecaRow r;
      Token id = ident("failure mode id");
      r.id = id.text;
      word("S");
      punct("=");
      r.severity = integer("severity score");
      word("O");
      punct("=");
      r.occurrence = integer("occurrence score");
      word("D");
      punct("=");
      r.detection = integer("detection score");
      r.notes = maybe_string().value_or("");
      span("fmeca:" + w.id + "/mode:" + r.id, id);
      w.rows.push_back(std::move(r));
    }
    take();
    model_.fmeca.push_back(std::move(w));
  }

  std::vector<std::string> id_list(const std::string& what, bool allow_empty) {
    punct("(");
    std::vector<std::string> out;
    if (!(allow_empty && at_punct(")"))) {
      out.push_back(ident(what).text);
      while (at_punct(",")) {
        take();
        out.push_back(ident(what).text);
      }
    }
    punct(")");
    return out;
  }

  void bnet() {
    Token kw = take();
    BayesNet net;
    net.id = ident("network id").text;
    span("bnet:" + net.id, kw);
    punct("{");
    while (!at_punct("}")) {
      if (!at_word("node")) unexpected({"'node'", "'}'"});
      take();
      BnNode n;
      Token id = ident("node id");
      n.id = id.text;
      span("bnet:" + net.id + "/node:" + n.id, id);
      word("states");
      n.states = id_list("state", false);
      if (at_word("parents")) {
        take();
        n.parents = id_list("parent id", false);
      }
      word("cpt");
      punct("{");
      while (!at_punct("}")) {
        if (!at_punct("(")) unexpected({"'('", "'}'"});
        CptRow row;
        row.parent_states = id_list("parent state", true);
        row.probabilities.push_back(number("probability").number);
        while (cur_.kind == Tok::Number) row.probabilities.push_back(take().number);
        n.cpt.push_back(std::move(row));
      }
      take();
      net.nodes.push_back(std::move(n));
    }
    take();
    model_.bayes_nets.push_back(std::move(net));
  }

  void tolerance() {
    Token kw = take();
    ToleranceCurve t;
    t.id = ident("tolerance id").text;
    span("tolerance:" + t.id, kw);
    if (at_unit()) t.unit = unit();
    punct("{");
    while (!at_punct("}")) {
      if (cur_.kind != Tok::Number) unexpected({"severity", "'}'"});
      const double s = take().number;
      const double p = number("exceedance probability").number;
      t.points.push_back(TolerancePoint{s, p});
    }
    take();
    model_.tolerances.push_back(std::move(t));
  }

  void kri() {
    Token kw = take();
    KriDefinition k;
    k.id = ident("indicator id").text;
    k.description = maybe_string().value_or("");
    word("threshold");
    punct("=");
    k.threshold = number("threshold").number;
    if (at_word("above")) k.direction = KriDirection::Above;
    else if (at_word("below")) k.direction = KriDirection::Below;
    else unexpected({"'above'", "'below'"});
    take();
    span("kri:" + k.id, kw);
    model_.kris.push_back(std::move(k));
  }

  void dsa() {
    Token kw = take();
    DesignBasisCheck d;
    d.id = ident("check id").text;
    span("dsa:" + d.id, kw);
    word("scenario");
    d.scenario = ident("scenario id").text;
    punct("{");
    bool have_criterion = false;
    while (!at_punct("}")) {
      if (at_word("override")) {
        take();
        DsaOverride o;
        o.kind = DsaOverride::Kind::SetProbability;
        o.target = ident("event or condition id").text;
        word("p");
        punct("=");
        o.probability = number("probability").number;
        d.overrides.push_back(std::move(o));
      } else if (at_word("force-fail")) {
        take();
        DsaOverride o;
        o.kind = DsaOverride::Kind::ForceFailure;
        o.target = ident("event or condition id").text;
        d.overrides.push_back(std::move(o));
      } else if (at_word("criterion") && !have_criterion) {
        take();
        have_criterion = true;
        if (at_word("top")) {
          take();
          d.metric = DsaMetric::TopProbability;
        } else if (at_word("outcome")) {
          take();
          d.metric = DsaMetric::OutcomeValue;
          d.outcome = ident("outcome id").text;
        } else if (at_word("severity")) {
          take();
          d.metric = DsaMetric::Severity;
        } else {
          unexpected({"'top'", "'outcome'", "'severity'"});
        }
        if (at_punct("<")) d.comparator = Comparator::Less;
        else if (at_punct("<=")) d.comparator = Comparator::LessEqual;
        else if (at_punct(">")) d.comparator = Comparator::Greater;
        else if (at_punct(">=")) d.comparator = Comparator::GreaterEqual;
        else unexpected({"'<'", "'<='", "'>'", "'>='"});
        take();
        d.limit = number("limit").number;
      } else {
        std::vector<std::string> expected{"'override'", "'force-fail'"};
        if (!have_criterion) expected.emplace_back("'criterion'");
        else expected.emplace_back("'}'");
        unexpected(expected);
      }
    }
    if (!have_criterion) fail(cur_, "design-basis check needs a criterion", {"'criterion'"});
    take();
    model_.dsa_checks.push_back(std::move(d));
  }

  void chain() {
    Token kw = take();
    LikelihoodChainSpec c;
    c.id = ident("chain id").text;
    span("chain:" + c.id, kw);
    word("capability");
    c.capability = value(false).quantity;
    word("misuse");
    c.misuse = value(false).quantity;
    word("harm");
    c.harm = value(false).quantity;
    model_.chains.push_back(std::move(c));
  }

  void loss() {
    Token kw = take();
    LossModel l;
    l.id = ident("loss id").text;
    span("loss:" + l.id, kw);
    word("count");
    l.count = field_quantity();
    if (auto s = maybe_string()) l.count = l.count.with_provenance(*s);
    word("severity");
    l.severity = field_quantity();
    if (auto s = maybe_string()) l.severity = l.severity.with_provenance(*s);
    l.unit = unit();
    model_.losses.push_back(std::move(l));
  }

  Lexer lex_;
  Token cur_;
  ScenarioModel model_;
};

// ---------------------------------------------------------------- writer

std::string quoted(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default: out += c;
    }
  }
  return out + "\"";
}

std::string dist_text(const UncertainQuantity& q) {
  std::string out(to_string(q.kind()));
  out += "(";
  if (q.kind() == QuantityKind::Mixture) {
    for (std::size_t i = 0; i < q.components().size(); ++i) {
      if (i) out += ", ";
      out += format_number(q.params()[i]) + ": " + dist_text(q.components()[i]);
    }
  } else {
    for (std::size_t i = 0; i < q.params().size(); ++i) {
      if (i) out += ", ";
      out += format_number(q.params()[i]);
    }
  }
  return out + ")";
}

std::string provenance(const UncertainQuantity& q) {
  return q.provenance().empty() ? "" : " " + quoted(q.provenance());
}

/// Value in the "p=" / "~" / "freq=" forms.
std::string value_text(const UncertainQuantity& q, bool frequency) {
  std::string out;
  if (frequency) {
    out = q.is_point() ? "freq=" + format_number(q.params()[0]) + "/yr" : "freq~" + dist_text(q);
  } else {
    out = q.is_point() ? "p=" + format_number(q.params()[0]) : "~" + dist_text(q);
  }
  return out + provenance(q);
}

std::string field_text(const UncertainQuantity& q) {
  return (q.is_point() ? "=" + format_number(q.params()[0]) : " ~" + dist_text(q)) + provenance(q);
}

class Writer {
 public:
  std::string str() const { return out_.str(); }

  void line(int depth, const std::string& text) { out_ << std::string(static_cast<std::size_t>(depth) * 2, ' ') << text << '\n'; }

  void block_gap() {
    if (started_) out_ << '\n';
    started_ = true;
  }

  void fault_tree(const FaultTree& ft) {
    std::vector<bool> written(ft.events.size(), false);
    gate(ft, 0, 0, "ftree " + ft.id + " ", written);
  }

  void event_tree(const EventTree& et) {
    std::string head = "etree " + et.id;
    if (et.initiator) head += " init " + value_text(et.initiator->quantity, et.initiator->frequency);
    line(0, head);
    branch(et, 0, 1);
  }

 private:
  void gate(const FaultTree& ft, std::size_t g, int depth, const std::string& prefix, std::vector<bool>& written) {
    const Gate& gt = ft.gates[g];
    line(depth, prefix + (gt.kind == GateKind::And ? "and {" : "or {"));
    for (const NodeRef& c : gt.children) {
      if (c.kind == NodeRef::Kind::Gate) {
        gate(ft, c.index, depth + 1, "", written);
        continue;
      }
      const BasicEvent& e = ft.events[c.index];
      std::string text = "event " + e.id;
      if (!written[c.index] && e.quantity) text += " " + value_text(*e.quantity, e.frequency);
      written[c.index] = true;
      line(depth + 1, text);
    }
    line(depth, "}");
  }

  void branch(const EventTree& et, std::size_t n, int depth) {
    const BranchNode& node = et.nodes[n];
    line(depth, "branch " + node.condition + " " + value_text(node.success, false) + " {");
    for (const BranchChild* child : {&node.on_success, &node.on_failure}) {
      if (const auto* leaf = std::get_if<OutcomeLeaf>(child)) {
        line(depth + 1, "outcome " + leaf->id + " severity=" + format_number(leaf->severity.magnitude()) + " " +
                            std::string(to_string(leaf->severity.unit())));
      } else {
        branch(et, std::get<std::size_t>(*child), depth + 1);
      }
    }
    line(depth, "}");
  }

  std::ostringstream out_;
  bool started_ = false;
};

std::string id_tuple(const std::vector<std::string>& ids) { return "(" + join(ids, ", ") + ")"; }

}  // namespace

ParseError::ParseError(SourceSpan span, std::string message, std::vector<std::string> expected)
    : Error(error_text(span, message.empty() ? "syntax error" : message, expected)),
      span_(std::move(span)),
      message_(message.empty() ? "syntax error" : std::move(message)),
      expected_(std::move(expected)) {}

ScenarioModel parse(std::string_view text, const std::string& filename) {
  return Parser(text, filename).document();
}

ScenarioModel parse_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path);
}

std::string serialize(const ScenarioModel& model) {
  const ValidationReport report = validate(model);
  if (report.has_errors()) {
    const auto& f = *std::find_if(report.findings().begin(), report.findings().end(),
                                  [](const Finding& x) { return x.level == FindingLevel::Error; });
    throw DomainError("cannot serialize a model with validation errors: " + f.location + ": " + f.message);
  }
  const ScenarioModel m = canonicalize(model);
  Writer w;
  for (const auto& h : m.hazards) {
    w.block_gap();
    w.line(0, "hazard " + h.id + " " + quoted(h.description));
  }
  for (const auto& ft : m.fault_trees) {
    w.block_gap();
    w.fault_tree(ft);
  }
  for (const auto& et : m.event_trees) {
    w.block_gap();
    w.event_tree(et);
  }
  for (const auto& b : m.bowties) {
    w.block_gap();
    std::string text = "bowtie " + b.id + " event " + b.critical_event + " causes " + b.fault_tree + " consequences " +
                       b.event_tree;
    if (b.hazard) text += " hazard " + *b.hazard;
    w.line(0, text);
  }
  for (const auto& ws : m.fmeca) {
    w.block_gap();
    w.line(0, "fmeca " + ws.id + " {");
    for (const auto& r : ws.rows) {
      std::string text = "mode " + r.id + " S=" + std::to_string(r.severity) + " O=" + std::to_string(r.occurrence) +
                         " D=" + std::to_string(r.detection);
      if (!r.notes.empty()) text += " " + quoted(r.notes);
      w.line(1, text);
    }
    w.line(0, "}");
  }
  for (const auto& net : m.bayes_nets) {
    w.block_gap();
    w.line(0, "bnet " + net.id + " {");
    for (const auto& n : net.nodes) {
      std::string head = "node " + n.id + " states " + id_tuple(n.states);
      if (!n.parents.empty()) head += " parents " + id_tuple(n.parents);
      w.line(1, head + " cpt {");
      for (const auto& row : n.cpt) {
        std::string text = id_tuple(row.parent_states);
        for (double p : row.probabilities) text += " " + format_number(p);
        w.line(2, text);
      }
      w.line(1, "}");
    }
    w.line(0, "}");
  }
  for (const auto& t : m.tolerances) {
    w.block_gap();
    std::string head = "tolerance " + t.id;
    if (t.unit) head += " " + std::string(to_string(*t.unit));
    w.line(0, head + " {");
    for (const auto& p : t.points) w.line(1, format_number(p.severity) + " " + format_number(p.max_exceedance));
    w.line(0, "}");
  }
  for (const auto& k : m.kris) {
    w.block_gap();
    std::string text = "kri " + k.id;
    if (!k.description.empty()) text += " " + quoted(k.description);
    text += " threshold=" + format_number(k.threshold) + (k.direction == KriDirection::Above ? " above" : " below");
    w.line(0, text);
  }
  for (const auto& d : m.dsa_checks) {
    w.block_gap();
    w.line(0, "dsa " + d.id + " scenario " + d.scenario + " {");
    for (const auto& o : d.overrides) {
      if (o.kind == DsaOverride::Kind::SetProbability) w.line(1, "override " + o.target + " p=" + format_number(o.probability));
      else w.line(1, "force-fail " + o.target);
    }
    std::string metric = d.metric == DsaMetric::TopProbability ? "top"
                         : d.metric == DsaMetric::Severity     ? "severity"
                                                               : "outcome " + d.outcome;
    w.line(1, "criterion " + metric + " " + std::string(to_string(d.comparator)) + " " + format_number(d.limit));
    w.line(0, "}");
  }
  for (const auto& c : m.chains) {
    w.block_gap();
    w.line(0, "chain " + c.id + " capability " + value_text(c.capability, false) + " misuse " +
                  value_text(c.misuse, false) + " harm " + value_text(c.harm, false));
  }
  for (const auto& l : m.losses) {
    w.block_gap();
    w.line(0, "loss " + l.id + " count" + field_text(l.count) + " severity" + field_text(l.severity) + " " +
                  std::string(to_string(l.unit)));
  }
  return w.str();
}

}  // namespace riskforge::dsl
