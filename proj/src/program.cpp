#include "stwa/program.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

namespace stwa {

ParseError::ParseError(int line, int column, const std::string &msg)
    : std::runtime_error("line " + std::to_string(line) + ", column " +
                         std::to_string(column) + ": " + msg),
      line_(line), column_(column) {}

// ---------------------------------------------------------------------------
// Program container

void Program::add_clause(Clause c) {
  PredKey k = pred_of(c.head);
  auto [it, inserted] = by_pred_.try_emplace(k);
  if (inserted)
    order_.push_back(k);
  it->second.push_back(clauses.size());
  clauses.push_back(std::move(c));
}

void Program::add_directive(Directive d) { directives.push_back(std::move(d)); }

void Program::merge(const Program &other) {
  for (const auto &d : other.directives)
    add_directive(d);
  for (const auto &c : other.clauses)
    add_clause(c);
  for (const auto &q : other.queries)
    queries.push_back(q);
}

const std::vector<std::size_t> &Program::clauses_of(PredKey k) const {
  static const std::vector<std::size_t> none;
  auto it = by_pred_.find(k);
  return it == by_pred_.end() ? none : it->second;
}

std::vector<PredKey> Program::predicates() const { return order_; }

const Directive *Program::table_directive(PredKey k) const {
  for (const auto &d : directives) {
    if (d.pred == k && (d.kind == Directive::Kind::TableVariant ||
                        d.kind == Directive::Kind::TableSubsumptive ||
                        d.kind == Directive::Kind::TableIndex))
      return &d;
  }
  return nullptr;
}

// ---------------------------------------------------------------------------
// Lexer

namespace {

bool is_symbol_char(char c) {
  return std::string_view("+-*/\\^<>=~:.?@#&$").find(c) !=
         std::string_view::npos;
}
bool is_alnum(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

enum class Tok { Atom, Var, Int, Punct, End, Eof };

struct Token {
  Tok kind;
  std::string text;
  std::int64_t value = 0;
  bool quoted = false;
  bool layout_before = false;
  int line = 1;
  int col = 1;
};

class Lexer {
public:
  explicit Lexer(std::string_view src) : s_(src) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    for (;;) {
      bool layout = skip_layout();
      Token t = next();
      t.layout_before = layout;
      out.push_back(t);
      if (t.kind == Tok::Eof)
        break;
    }
    return out;
  }

private:
  std::string_view s_;
  std::size_t i_ = 0;
  int line_ = 1;
  int col_ = 1;

  char peek(std::size_t k = 0) const {
    return i_ + k < s_.size() ? s_[i_ + k] : '\0';
  }
  char get() {
    char c = s_[i_++];
    if (c == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    return c;
  }
  [[noreturn]] void fail(const std::string &msg) const {
    throw ParseError(line_, col_, msg);
  }

  bool skip_layout() {
    bool any = false;
    for (;;) {
      char c = peek();
      if (c == '\0')
        return any;
      if (std::isspace(static_cast<unsigned char>(c))) {
        get();
        any = true;
      } else if (c == '%') {
        while (peek() != '\0' && peek() != '\n')
          get();
        any = true;
      } else if (c == '/' && peek(1) == '*') {
        get();
        get();
        while (!(peek() == '*' && peek(1) == '/')) {
          if (peek() == '\0')
            fail("unterminated block comment");
          get();
        }
        get();
        get();
        any = true;
      } else {
        return any;
      }
    }
  }

  Token make(Tok k, std::string text, int line, int col) {
    Token t;
    t.kind = k;
    t.text = std::move(text);
    t.line = line;
    t.col = col;
    return t;
  }

  std::string quoted_body(char q) {
    std::string out;
    for (;;) {
      if (peek() == '\0')
        fail("unterminated quoted item");
      char c = get();
      if (c == q) {
        if (peek() == q) {
          out += get();
          continue;
        }
        return out;
      }
      if (c == '\\') {
        char e = get();
        switch (e) {
        case 'n': out += '\n'; break;
        case 't': out += '\t'; break;
        case '\\': out += '\\'; break;
        case '\'': out += '\''; break;
        case '"': out += '"'; break;
        case '\n': break;
        default: fail(std::string("unknown escape \\") + e);
        }
        continue;
      }
      out += c;
    }
  }

  Token next() {
    int line = line_, col = col_;
    char c = peek();
    if (c == '\0')
      return make(Tok::Eof, "", line, col);
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::string digits;
      while (std::isdigit(static_cast<unsigned char>(peek())))
        digits += get();
      Token t = make(Tok::Int, digits, line, col);
      try {
        t.value = std::stoll(digits);
      } catch (const std::out_of_range &) {
        fail("integer out of range");
      }
      return t;
    }
    if (c == '_' || std::isupper(static_cast<unsigned char>(c))) {
      std::string name;
      while (is_alnum(peek()))
        name += get();
      return make(Tok::Var, name, line, col);
    }
    if (std::islower(static_cast<unsigned char>(c))) {
      std::string name;
      while (is_alnum(peek()))
        name += get();
      return make(Tok::Atom, name, line, col);
    }
    if (c == '\'' || c == '"') {
      get();
      Token t = make(Tok::Atom, quoted_body(c), line, col);
      t.quoted = true;
      return t;
    }
    if (c == '.') {
      char n = peek(1);
      if (n == '\0' || n == '%' || std::isspace(static_cast<unsigned char>(n))) {
        get();
        return make(Tok::End, ".", line, col);
      }
    }
    if (std::string_view("()[]{},|").find(c) != std::string_view::npos) {
      get();
      return make(Tok::Punct, std::string(1, c), line, col);
    }
    if (c == '!' || c == ';') {
      get();
      return make(Tok::Atom, std::string(1, c), line, col);
    }
    if (is_symbol_char(c)) {
      std::string name;
      while (is_symbol_char(peek())) {
        // A '.' followed by layout ends the clause even inside a symbol run.
        if (peek() == '.' && !name.empty()) {
          char n = peek(1);
          if (n == '\0' || n == '%' ||
              std::isspace(static_cast<unsigned char>(n)))
            break;
        }
        name += get();
      }
      return make(Tok::Atom, name, line, col);
    }
    fail(std::string("unexpected character '") + c + "'");
  }
};

// ---------------------------------------------------------------------------
// Operators

enum class OpType { XFX, XFY, YFX, FX, FY };

struct OpDef {
  int priority;
  OpType type;
};

const std::map<std::string, OpDef> &infix_ops() {
  static const std::map<std::string, OpDef> ops = {
      {":-", {1200, OpType::XFX}}, {"<-", {1200, OpType::XFX}},
      {"-->", {1200, OpType::XFX}}, {"as", {1100, OpType::XFX}},
      {";", {1100, OpType::XFY}},  {"|", {1100, OpType::XFY}},
      {"->", {1050, OpType::XFY}}, {",", {1000, OpType::XFY}},
      {"=", {700, OpType::XFX}},   {"\\=", {700, OpType::XFX}},
      {"==", {700, OpType::XFX}},  {"\\==", {700, OpType::XFX}},
      {"is", {700, OpType::XFX}},  {"+", {500, OpType::YFX}},
      {"-", {500, OpType::YFX}},   {"*", {400, OpType::YFX}},
      {"/", {400, OpType::YFX}},
  };
  return ops;
}

const std::map<std::string, OpDef> &prefix_ops() {
  static const std::map<std::string, OpDef> ops = {
      {":-", {1200, OpType::FX}},
      {"?-", {1200, OpType::FX}},
      {"table", {1150, OpType::FX}},
      {"-", {200, OpType::FY}},
  };
  return ops;
}

const OpDef *find_infix(const std::string &name) {
  auto it = infix_ops().find(name);
  return it == infix_ops().end() ? nullptr : &it->second;
}
const OpDef *find_prefix(const std::string &name) {
  auto it = prefix_ops().find(name);
  return it == prefix_ops().end() ? nullptr : &it->second;
}

// ---------------------------------------------------------------------------
// Parser

class Parser {
public:
  Parser(std::vector<Token> toks, VarSource &vars)
      : t_(std::move(toks)), vars_(vars) {}

  bool at_eof() const { return t_[i_].kind == Tok::Eof; }
  const Token &cur() const { return t_[i_]; }

  void reset_names(std::map<std::string, Term> *external) {
    names_ = external ? external : &own_names_;
    if (!external)
      own_names_.clear();
  }

  Term read_clause_term() {
    Term t = parse(1200).first;
    if (cur().kind != Tok::End)
      error("operator expected, got " + describe(cur()));
    ++i_;
    return t;
  }

  Term read_single_term() {
    Term t = parse(1200).first;
    if (cur().kind == Tok::End)
      ++i_;
    if (cur().kind != Tok::Eof)
      error("unexpected " + describe(cur()) + " after term");
    return t;
  }

  [[noreturn]] void error(const std::string &msg) const {
    throw ParseError(cur().line, cur().col, msg);
  }

private:
  std::vector<Token> t_;
  std::size_t i_ = 0;
  VarSource &vars_;
  std::map<std::string, Term> own_names_;
  std::map<std::string, Term> *names_ = &own_names_;

  static std::string describe(const Token &t) {
    switch (t.kind) {
    case Tok::Eof: return "end of input";
    case Tok::End: return "'.'";
    default: return "'" + t.text + "'";
    }
  }

  const Token &peek(std::size_t k = 1) const {
    return t_[std::min(i_ + k, t_.size() - 1)];
  }

  bool is_punct(const Token &t, char c) const {
    return t.kind == Tok::Punct && t.text.size() == 1 && t.text[0] == c;
  }

  void expect_punct(char c) {
    if (!is_punct(cur(), c))
      error(std::string("expected '") + c + "', got " + describe(cur()));
    ++i_;
  }

  // Tokens that cannot begin a term.
  bool ends_term(const Token &t) const {
    if (t.kind == Tok::End || t.kind == Tok::Eof)
      return true;
    if (t.kind == Tok::Punct)
      return t.text == ")" || t.text == "]" || t.text == "}" ||
             t.text == "," || t.text == "|";
    return false;
  }

  Term variable(const std::string &name) {
    if (name == "_")
      return vars_.fresh();
    auto it = names_->find(name);
    if (it != names_->end())
      return it->second;
    Term v = vars_.fresh(intern(name));
    names_->emplace(name, v);
    return v;
  }

  std::vector<Term> arglist() {
    std::vector<Term> args;
    expect_punct('(');
    for (;;) {
      args.push_back(parse(999).first);
      if (is_punct(cur(), ',')) {
        ++i_;
        continue;
      }
      expect_punct(')');
      return args;
    }
  }

  Term list_tail() {
    std::vector<Term> items;
    for (;;) {
      items.push_back(parse(999).first);
      if (is_punct(cur(), ',')) {
        ++i_;
        continue;
      }
      break;
    }
    Term tail;
    if (is_punct(cur(), '|')) {
      ++i_;
      tail = parse(999).first;
    }
    expect_punct(']');
    return Term::list(items, tail);
  }

  std::pair<Term, int> primary(int max) {
    const Token tok = cur();
    switch (tok.kind) {
    case Tok::Int:
      ++i_;
      return {Term::integer(tok.value), 0};
    case Tok::Var:
      ++i_;
      return {variable(tok.text), 0};
    case Tok::End:
    case Tok::Eof:
      error("unexpected " + describe(tok));
    case Tok::Punct:
      if (tok.text == "(") {
        ++i_;
        Term t = parse(1200).first;
        expect_punct(')');
        return {t, 0};
      }
      if (tok.text == "[") {
        ++i_;
        if (is_punct(cur(), ']')) {
          ++i_;
          return {atom_or_compound("[]"), 0};
        }
        return {list_tail(), 0};
      }
      if (tok.text == "{") {
        ++i_;
        if (is_punct(cur(), '}')) {
          ++i_;
          return {Term::atom("{}"), 0};
        }
        Term t = parse(1200).first;
        expect_punct('}');
        return {Term::compound("{}", {t}), 0};
      }
      error("unexpected " + describe(tok));
    case Tok::Atom:
      break;
    }

    ++i_;
    const std::string &name = tok.text;
    if (is_punct(cur(), '(') && !cur().layout_before)
      return {Term::compound(name, arglist()), 0};

    if (!tok.quoted && name == "-" && cur().kind == Tok::Int &&
        !cur().layout_before) {
      std::int64_t v = cur().value;
      ++i_;
      return {Term::integer(-v), 0};
    }

    if (!tok.quoted) {
      if (const OpDef *op = find_prefix(name)) {
        const Token &n = cur();
        bool operand_follows = !ends_term(n);
        // An infix operator next means this prefix operator is an atom
        // operand, e.g. `- = x`.
        if (operand_follows && n.kind == Tok::Atom && !n.quoted &&
            find_infix(n.text) && !(is_punct(peek(), '(') &&
                                    !peek().layout_before))
          operand_follows = false;
        if (operand_follows) {
          int p = op->priority;
          if (p > max)
            p = 999;
          int argmax = op->type == OpType::FY ? p : p - 1;
          Term arg = parse(argmax).first;
          return {Term::compound(name, {arg}), p};
        }
        int p = op->priority;
        return {Term::atom(name), p > max ? 0 : p};
      }
    }
    return {Term::atom(name), 0};
  }

  Term atom_or_compound(const std::string &name) {
    if (is_punct(cur(), '(') && !cur().layout_before)
      return Term::compound(name, arglist());
    return Term::atom(name);
  }

  std::pair<Term, int> parse(int max) {
    auto [left, left_p] = primary(max);
    for (;;) {
      const Token &tok = cur();
      std::string name;
      if (tok.kind == Tok::Atom && !tok.quoted)
        name = tok.text;
      else if (is_punct(tok, ',') || is_punct(tok, '|'))
        name = tok.text;
      else
        break;
      const OpDef *op = find_infix(name);
      if (!op || op->priority > max)
        break;
      int lmax = op->type == OpType::YFX ? op->priority : op->priority - 1;
      int rmax = op->type == OpType::XFY ? op->priority : op->priority - 1;
      if (left_p > lmax)
        break;
      ++i_;
      Term right = parse(rmax).first;
      if (name == "|")
        name = ";";
      left = Term::compound(name, {left, right});
      left_p = op->priority;
    }
    return {left, left_p};
  }
};

// ---------------------------------------------------------------------------
// Directives

void collect_pred_indicators(const Term &t, std::vector<PredKey> &out,
                             const Parser &p) {
  if (t.is_functor(",", 2)) {
    collect_pred_indicators(t.arg(0), out, p);
    collect_pred_indicators(t.arg(1), out, p);
    return;
  }
  if (t.is_functor("/", 2) && t.arg(0).is_atom() && t.arg(1).is_int() &&
      t.arg(1).int_value() >= 0) {
    out.push_back({t.arg(0).functor(),
                   static_cast<std::uint32_t>(t.arg(1).int_value())});
    return;
  }
  p.error("expected predicate indicator Name/Arity");
}

void collect_positions(const Term &t, std::vector<int> &out,
                       const Parser &p) {
  if (t.is_functor("+", 2)) {
    collect_positions(t.arg(0), out, p);
    collect_positions(t.arg(1), out, p);
    return;
  }
  if (t.is_int() && t.int_value() >= 1) {
    out.push_back(static_cast<int>(t.int_value()));
    return;
  }
  p.error("index positions must be positive integers joined by '+'");
}

std::vector<IndexSpec> parse_specs(const Term &list, const Parser &p) {
  std::vector<IndexSpec> specs;
  Term cur = list;
  bool zero_seen = false;
  while (cur.is_functor(".", 2)) {
    const Term &item = cur.arg(0);
    if (zero_seen)
      p.error("the no-index marker 0 must be the last index specification");
    IndexSpec spec;
    if (item.is_int() && item.int_value() == 0) {
      zero_seen = true;
    } else {
      collect_positions(item, spec.positions, p);
      std::set<int> seen(spec.positions.begin(), spec.positions.end());
      if (seen.size() != spec.positions.size())
        p.error("duplicate position in index specification");
    }
    specs.push_back(std::move(spec));
    cur = cur.arg(1);
  }
  if (!cur.is_atom("[]"))
    p.error("table_index expects a proper list of index specifications");
  if (specs.empty())
    p.error("table_index needs at least one index specification");
  return specs;
}

std::vector<Directive> make_directives(const Term &body, int line,
                                       const Parser &p) {
  std::vector<Directive> out;
  if (body.is_functor("table", 1)) {
    Term spec = body.arg(0);
    Directive::Kind kind = Directive::Kind::TableVariant;
    if (spec.is_functor("as", 2)) {
      const Term &mode = spec.arg(1);
      if (mode.is_atom("subsumptive"))
        kind = Directive::Kind::TableSubsumptive;
      else if (!mode.is_atom("variant"))
        p.error("unknown tabling mode " + print_term(mode));
      spec = spec.arg(0);
    }
    std::vector<PredKey> preds;
    collect_pred_indicators(spec, preds, p);
    for (const auto &k : preds) {
      Directive d;
      d.kind = kind;
      d.pred = k;
      d.source = body;
      d.line = line;
      out.push_back(d);
    }
    return out;
  }
  if (body.is_functor("table_index", 2)) {
    std::vector<PredKey> preds;
    collect_pred_indicators(body.arg(0), preds, p);
    if (preds.size() != 1)
      p.error("table_index takes a single predicate indicator");
    Directive d;
    d.kind = Directive::Kind::TableIndex;
    d.pred = preds[0];
    d.specs = parse_specs(body.arg(1), p);
    d.source = body;
    d.line = line;
    out.push_back(d);
    return out;
  }
  Directive d;
  d.kind = body.is_functor("op", 3) ? Directive::Kind::Op
                                    : Directive::Kind::Other;
  d.source = body;
  d.line = line;
  out.push_back(d);
  return out;
}

bool is_table_kind(Directive::Kind k) {
  return k == Directive::Kind::TableVariant ||
         k == Directive::Kind::TableSubsumptive ||
         k == Directive::Kind::TableIndex;
}

} // namespace

// ---------------------------------------------------------------------------
// Public parsing entry points

std::vector<Term> flatten_conjunction(const Term &t) {
  std::vector<Term> out;
  std::vector<Term> stack{t};
  while (!stack.empty()) {
    Term g = stack.back();
    stack.pop_back();
    if (g.is_functor(",", 2)) {
      stack.push_back(g.arg(1));
      stack.push_back(g.arg(0));
    } else {
      out.push_back(g);
    }
  }
  return out;
}

Term make_conjunction(const std::vector<Term> &goals) {
  if (goals.empty())
    return Term::atom(sym::truth);
  Term out = goals.back();
  for (std::size_t i = goals.size() - 1; i-- > 0;)
    out = Term::compound(sym::comma, {goals[i], out});
  return out;
}

Program parse_program(std::string_view text, VarSource &vars) {
  Parser parser(Lexer(text).run(), vars);
  Program prog;
  while (!parser.at_eof()) {
    int line = parser.cur().line;
    int col = parser.cur().col;
    parser.reset_names(nullptr);
    Term t = parser.read_clause_term();
    if (t.is_functor(":-", 1)) {
      for (auto &d : make_directives(t.arg(0), line, parser)) {
        if (is_table_kind(d.kind)) {
          const Directive *prev = prog.table_directive(d.pred);
          if (prev && (prev->kind != d.kind || prev->specs != d.specs))
            throw ParseError(line, col,
                             "conflicting tabling directives for " +
                                 to_string(d.pred));
          if (prev)
            continue;
        }
        prog.add_directive(std::move(d));
      }
      continue;
    }
    if (t.is_functor("?-", 1)) {
      prog.queries.push_back(t.arg(0));
      continue;
    }
    Clause c;
    c.line = line;
    if (t.is_functor(":-", 2)) {
      c.head = t.arg(0);
      c.body = flatten_conjunction(t.arg(1));
    } else {
      c.head = t;
    }
    if (c.head.is_var() || c.head.is_int())
      throw ParseError(line, col, "clause head must be callable");
    if (c.head.is_functor(",", 2))
      throw ParseError(line, col, "clause head cannot be a conjunction");
    for (const auto &g : c.body)
      if (g.is_int())
        throw ParseError(line, col, "body goal must be callable");
    prog.add_clause(std::move(c));
  }
  return prog;
}

Program parse_program(std::string_view text) {
  VarSource vars;
  return parse_program(text, vars);
}

Program load_program_file(const std::string &path, VarSource &vars) {
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("cannot open program file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_program(ss.str(), vars);
  } catch (const ParseError &e) {
    throw ParseError(e.line(), e.column(),
                     path + ": " + std::string(e.what()));
  }
}

Term parse_term(std::string_view text, VarSource &vars,
                std::map<std::string, Term> *names) {
  Parser parser(Lexer(text).run(), vars);
  parser.reset_names(names);
  return parser.read_single_term();
}

// ---------------------------------------------------------------------------
// Printing

std::string quote_atom(const std::string &name) {
  if (name == "[]" || name == "!" || name == ";" || name == "{}")
    return name;
  if (!name.empty() && std::islower(static_cast<unsigned char>(name[0])) &&
      std::all_of(name.begin(), name.end(), is_alnum))
    return name;
  if (!name.empty() && name != "." &&
      std::all_of(name.begin(), name.end(), is_symbol_char))
    return name;
  std::string out = "'";
  for (char c : name) {
    if (c == '\'' || c == '\\')
      out += '\\';
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    out += c;
  }
  out += '\'';
  return out;
}

namespace {

std::string default_name(const Term &v) {
  if (v.var_name() != 0)
    return symbol_name(v.var_name());
  return "_G" + std::to_string(v.var_id());
}

bool alpha_op(const std::string &name) {
  return !name.empty() && std::isalpha(static_cast<unsigned char>(name[0]));
}

void print_rec(const Term &t, int max, const VarNamer &namer,
               std::string &out);

void print_args(const Term &t, const VarNamer &namer, std::string &out) {
  out += '(';
  for (std::size_t i = 0; i < t.arity(); ++i) {
    if (i)
      out += ',';
    print_rec(t.arg(i), 999, namer, out);
  }
  out += ')';
}

void print_rec(const Term &t, int max, const VarNamer &namer,
               std::string &out) {
  switch (t.kind()) {
  case TermKind::Var:
    out += namer ? namer(t) : default_name(t);
    return;
  case TermKind::Int:
    out += std::to_string(t.int_value());
    return;
  case TermKind::Atom: {
    const std::string &name = symbol_name(t.functor());
    if (name == ",") {
      out += "','";
      return;
    }
    bool is_op = find_infix(name) || find_prefix(name);
    std::string q = quote_atom(name);
    if (is_op && max < 1200 && q == name && !alpha_op(name) && name != "[]")
      out += "(" + q + ")";
    else
      out += q;
    return;
  }
  case TermKind::Compound:
    break;
  }

  const std::string &name = symbol_name(t.functor());
  if (t.functor() == sym::cons && t.arity() == 2) {
    out += '[';
    print_rec(t.arg(0), 999, namer, out);
    Term rest = t.arg(1);
    while (rest.is_compound() && rest.functor() == sym::cons &&
           rest.arity() == 2) {
      out += ',';
      print_rec(rest.arg(0), 999, namer, out);
      rest = rest.arg(1);
    }
    if (!rest.is_atom("[]")) {
      out += '|';
      print_rec(rest, 999, namer, out);
    }
    out += ']';
    return;
  }
  if (name == "{}" && t.arity() == 1) {
    out += '{';
    print_rec(t.arg(0), 1200, namer, out);
    out += '}';
    return;
  }
  if (t.arity() == 2) {
    if (const OpDef *op = find_infix(name)) {
      int p = op->priority;
      int lmax = op->type == OpType::YFX ? p : p - 1;
      int rmax = op->type == OpType::XFY ? p : p - 1;
      bool paren = p > max;
      if (paren)
        out += '(';
      std::string l, r;
      print_rec(t.arg(0), lmax, namer, l);
      print_rec(t.arg(1), rmax, namer, r);
      out += l;
      std::string opname = name == "," ? "," : quote_atom(name);
      bool space = alpha_op(name) || p >= 1050 ||
                   (!l.empty() && is_symbol_char(l.back())) ||
                   (!r.empty() && is_symbol_char(r.front()));
      if (name == ",")
        space = false;
      if (space)
        out += ' ' + opname + ' ';
      else
        out += opname;
      out += r;
      if (paren)
        out += ')';
      return;
    }
  }
  if (t.arity() == 1) {
    if (const OpDef *op = find_prefix(name)) {
      int p = op->priority;
      int amax = op->type == OpType::FY ? p : p - 1;
      bool paren = p > max;
      if (paren)
        out += '(';
      std::string a;
      print_rec(t.arg(0), amax, namer, a);
      out += name;
      if (alpha_op(name) || (!a.empty() && (is_symbol_char(a.front()) ||
                                           std::isdigit(static_cast<unsigned char>(a.front())) ||
                                           a.front() == '(')))
        out += ' ';
      out += a;
      if (paren)
        out += ')';
      return;
    }
  }
  out += quote_atom(name);
  print_args(t, namer, out);
}

} // namespace

std::string print_term(const Term &t, const VarNamer &namer) {
  return print_term(t, 1200, namer);
}

std::string print_term(const Term &t, int max_priority,
                       const VarNamer &namer) {
  std::string out;
  print_rec(t, max_priority, namer, out);
  return out;
}

std::string print_clause(const Clause &c, const VarNamer &namer) {
  bool neck = c.head.is_functor(":-", 2) || c.head.is_functor(":-", 1) ||
              c.head.is_functor("?-", 1);
  int head_max = c.body.empty() && !neck ? 1200 : 1199;
  std::string out = print_term(c.head, head_max, namer);
  if (!c.body.empty()) {
    out += " :- ";
    for (std::size_t i = 0; i < c.body.size(); ++i) {
      if (i)
        out += ", ";
      out += print_term(c.body[i], 999, namer);
    }
  }
  out += '.';
  return out;
}

std::string print_index_spec(const IndexSpec &s) {
  if (s.none())
    return "0";
  std::string out;
  for (std::size_t i = 0; i < s.positions.size(); ++i) {
    if (i)
      out += '+';
    out += std::to_string(s.positions[i]);
  }
  return out;
}

std::string print_directive(const Directive &d) {
  std::string pi = quote_atom(symbol_name(d.pred.name)) + "/" +
                   std::to_string(d.pred.arity);
  switch (d.kind) {
  case Directive::Kind::TableVariant:
    return ":- table " + pi + ".";
  case Directive::Kind::TableSubsumptive:
    return ":- table " + pi + " as subsumptive.";
  case Directive::Kind::TableIndex: {
    std::string out = ":- table_index(" + pi + ",[";
    for (std::size_t i = 0; i < d.specs.size(); ++i) {
      if (i)
        out += ',';
      out += print_index_spec(d.specs[i]);
    }
    return out + "]).";
  }
  case Directive::Kind::Op:
  case Directive::Kind::Other:
    break;
  }
  return ":- " + print_term(d.source, 1199, {}) + ".";
}

std::string print_program(const Program &p) {
  std::string out;
  for (const auto &d : p.directives)
    out += print_directive(d) + "\n";
  for (const auto &c : p.clauses)
    out += print_clause(c) + "\n";
  for (const auto &q : p.queries)
    out += "?- " + print_term(q, 1199, {}) + ".\n";
  return out;
}

// ---------------------------------------------------------------------------
// Validation

bool is_builtin(PredKey k) {
  static const std::set<std::pair<std::string, std::uint32_t>> builtins = {
      {"true", 0},     {"fail", 0},         {"false", 0},
      {"!", 0},        {"=", 2},            {"\\=", 2},
      {"==", 2},       {"\\==", 2},         {"var", 1},
      {"nonvar", 1},   {"atom", 1},         {"integer", 1},
      {"atomic", 1},   {",", 2},            {";", 2},
      {"->", 2},       {"call", 1},         {"scan", 2},
      {"data_records", 3}, {"table_error", 1},
  };
  return builtins.count({symbol_name(k.name), k.arity}) != 0;
}

namespace {

bool contains_cut(const Term &g) {
  if (g.is_atom("!"))
    return true;
  if (g.is_functor(",", 2) || g.is_functor(";", 2) || g.is_functor("->", 2))
    return contains_cut(g.arg(0)) || contains_cut(g.arg(1));
  return false;
}

} // namespace

std::vector<Diagnostic> validate(const Program &p) {
  std::vector<Diagnostic> out;
  auto error = [&](std::string m) {
    out.push_back({Diagnostic::Severity::Error, std::move(m)});
  };
  auto warning = [&](std::string m) {
    out.push_back({Diagnostic::Severity::Warning, std::move(m)});
  };

  for (const auto &c : p.clauses) {
    PredKey k = pred_of(c.head);
    if (is_builtin(k))
      error("line " + std::to_string(c.line) + ": cannot redefine builtin " +
            to_string(k));
  }

  std::set<PredKey> reported;
  for (const auto &d : p.directives) {
    if (!is_table_kind(d.kind))
      continue;
    if (d.kind == Directive::Kind::TableIndex) {
      for (const auto &s : d.specs)
        for (int pos : s.positions)
          if (pos < 1 || pos > static_cast<int>(d.pred.arity))
            error("table_index(" + to_string(d.pred) + "): position " +
                  std::to_string(pos) + " out of range 1.." +
                  std::to_string(d.pred.arity));
    }
    if (!p.defines(d.pred))
      warning("tabling directive for undefined predicate " +
              to_string(d.pred));
    if (reported.count(d.pred))
      continue;
    for (std::size_t ci : p.clauses_of(d.pred)) {
      const Clause &c = p.clauses[ci];
      bool cut = std::any_of(c.body.begin(), c.body.end(), contains_cut);
      if (cut) {
        error("line " + std::to_string(c.line) + ": cut in tabled predicate " +
              to_string(d.pred) +
              "; tabled predicates must not depend on instantiation state");
        reported.insert(d.pred);
        break;
      }
    }
  }
  for (const auto &d : p.directives)
    if (d.kind == Directive::Kind::Other)
      warning("line " + std::to_string(d.line) + ": ignored directive " +
              print_term(d.source));
  return out;
}

} // namespace stwa
