#include "doctest.h"

#include "stwa/program.hpp"

using namespace stwa;

TEST_CASE("clauses and facts") {
  Program p = parse_program("p(X,Y) :- e(X,Z), p(Z,Y).\ne(a,b).\n");
  REQUIRE(p.clauses.size() == 2);
  CHECK(p.clauses[0].body.size() == 2);
  CHECK(p.clauses[1].body.empty());
  CHECK(p.clauses[1].line == 2);
  CHECK(print_clause(p.clauses[0]) == "p(X,Y) :- e(X,Z), p(Z,Y).");
  CHECK(p.defines(PredKey{intern("e"), 2}));
  CHECK(p.clauses_of(PredKey{intern("p"), 2}).size() == 1);
}

TEST_CASE("table directives") {
  Program p = parse_program(":- table p/2.\n"
                            ":- table q/1 as subsumptive.\n"
                            ":- table_index(r/4,[1+2,1,2+3+4,4]).\n"
                            ":- table_index(s/2,[2,0]).\n");
  REQUIRE(p.directives.size() == 4);
  CHECK(p.directives[0].kind == Directive::Kind::TableVariant);
  CHECK(p.directives[1].kind == Directive::Kind::TableSubsumptive);
  CHECK(p.directives[2].kind == Directive::Kind::TableIndex);
  const auto &specs = p.directives[2].specs;
  REQUIRE(specs.size() == 4);
  CHECK(specs[0].positions == std::vector<int>{1, 2});
  CHECK(specs[2].positions == std::vector<int>{2, 3, 4});
  CHECK(p.directives[3].specs[1].none());
  CHECK(print_index_spec(specs[2]) == "2+3+4");
  CHECK(p.table_directive(PredKey{intern("s"), 2}) == &p.directives[3]);
}

TEST_CASE("table directive lists several predicates") {
  Program p = parse_program(":- table p1234/4, p4231/4 as subsumptive.\n");
  REQUIRE(p.directives.size() == 2);
  CHECK(p.directives[1].kind == Directive::Kind::TableSubsumptive);
  CHECK(p.directives[1].pred == PredKey{intern("p4231"), 4});
}

TEST_CASE("arrow facts and op directives") {
  Program p = parse_program(":- op(1200,xfx,('<-')).\np <- q,v,r,s.\n");
  REQUIRE(p.clauses.size() == 1);
  const Term &h = p.clauses[0].head;
  REQUIRE(h.is_functor("<-", 2));
  CHECK(flatten_conjunction(h.arg(1)).size() == 4);
}

TEST_CASE("control constructs parse with standard priorities") {
  Program p = parse_program(
      "p(A) :- nonvar(A) -> q(A) ; r(A).\n");
  REQUIRE(p.clauses[0].body.size() == 1);
  const Term &b = p.clauses[0].body[0];
  REQUIRE(b.is_functor(";", 2));
  CHECK(b.arg(0).is_functor("->", 2));
}

TEST_CASE("quoted atoms, lists and integers") {
  VarSource vs;
  Term t = parse_term("f('the cat', [a,b|T], -3)", vs);
  CHECK(print_term(t) == "f('the cat',[a,b|T],-3)");
  CHECK(quote_atom("abc") == "abc");
  CHECK(quote_atom("Abc") == "'Abc'");
  CHECK(quote_atom("[]") == "[]");
}

TEST_CASE("printer round trip") {
  const char *src = "q(X) :- (a -> b ; c), d, X = [1,2].\n";
  Program p = parse_program(src);
  Program again = parse_program(print_program(p));
  REQUIRE(again.clauses.size() == 1);
  CHECK(print_clause(again.clauses[0]) == print_clause(p.clauses[0]));
}

TEST_CASE("comments are skipped") {
  Program p = parse_program("% line\n/* block\n */ a.\n");
  CHECK(p.clauses.size() == 1);
}

TEST_CASE("parse errors carry positions") {
  try {
    parse_program("a.\nb(.\n");
    FAIL("expected a parse error");
  } catch (const ParseError &e) {
    CHECK(e.line() == 2);
  }
  CHECK_THROWS_AS(parse_program("a :- b"), ParseError);
}

TEST_CASE("validation") {
  auto errors = [](const char *src) {
    int n = 0;
    for (const auto &d : validate(parse_program(src)))
      n += d.severity == Diagnostic::Severity::Error;
    return n;
  };
  CHECK(errors("p(a).") == 0);
  CHECK(errors("var(a).") == 1);
  CHECK(errors(":- table_index(p/2,[3]).\np(a,b).") == 1);
  CHECK(errors(":- table p/1.\np(X) :- !, q(X).\nq(a).") == 1);
}

TEST_CASE("conjunction helpers") {
  VarSource vs;
  Term c = parse_term("(a,b,c)", vs);
  auto parts = flatten_conjunction(c);
  REQUIRE(parts.size() == 3);
  CHECK(make_conjunction(parts) == c);
  CHECK(make_conjunction({}).is_atom("true"));
}

TEST_CASE("merged programs keep source order") {
  VarSource vs;
  Program a = parse_program("p(1).", vs);
  Program b = parse_program("p(2).\n:- table q/1.", vs);
  a.merge(b);
  CHECK(a.clauses_of(PredKey{intern("p"), 1}).size() == 2);
  CHECK(a.directives.size() == 1);
}
