#include "doctest.h"

#include <random>
#include <set>

#include "../support/random_programs.hpp"
#include "stwa/oracle.hpp"

using namespace stwa;

namespace {

Program load(const std::string &name) {
  VarSource vs;
  return load_program_file(std::string(STWA_PROGRAMS_DIR) + "/" + name, vs);
}

std::set<std::string> names(const std::vector<Term> &ts) {
  std::set<std::string> out;
  for (const auto &t : ts)
    out.insert(print_term(t));
  return out;
}

using Set = std::set<std::string>;

} // namespace

TEST_CASE("graph program iteration tags") {
  FactSet m = least_model(load("graph_variant.P"));
  CHECK(names(m.at(0)) == Set{"e(a,b)", "e(b,c)", "e(e,a)", "e(c,b)", "e(d,e)"});
  CHECK(names(m.at(1)) == Set{"p(a,b)", "p(e,a)", "p(d,e)", "p(b,c)", "p(c,b)"});
  CHECK(names(m.at(2)) == Set{"p(a,c)", "p(e,b)", "p(d,a)", "p(b,b)", "p(c,c)"});
  CHECK(names(m.at(3)) == Set{"p(e,c)", "p(d,b)"});
  CHECK(names(m.at(4)) == Set{"p(d,c)"});
  CHECK(m.at(5).empty());
  CHECK(m.last_iteration() == 4);
  CHECK(m.size() == 18);
}

TEST_CASE("derivations record the rule instance") {
  VarSource vs;
  FactSet m = least_model(load("graph_variant.P"));
  const Derivation &d = m.derivation(parse_term("p(a,c)", vs));
  CHECK(names(d.body) == Set{"p(a,b)", "e(b,c)"});
  CHECK(m.tag(parse_term("p(z,z)", vs)) == -1);
}

TEST_CASE("propositional arrow reading") {
  FactSet m = least_model(arrow_reading(load("prop_interp.P")));
  CHECK(names(m.at(0)) == Set{"s", "t"});
  CHECK(names(m.at(1)) == Set{"r"});
  CHECK(names(m.at(2)) == Set{"u"});
  CHECK(names(m.at(3)) == Set{"q"});
  CHECK(names(m.at(4)) == Set{"p"});
  std::string log = iteration_log(m);
  CHECK(log.rfind("Iteration 0:\n    s, t: program facts\n", 0) == 0);
  CHECK(log.find("    r: from r <- s\n") != std::string::npos);
  CHECK(log.find("    q: from q <- u,r\n") != std::string::npos);
  CHECK(log.find("Iteration 5: nothing new, stop") != std::string::npos);
}

TEST_CASE("program without facts") {
  FactSet m = least_model(parse_program("p(X) :- q(X).\n"));
  CHECK(m.size() == 0);
  CHECK(m.last_iteration() == -1);
  CHECK(iteration_log(m) == "Iteration 0: nothing new, stop\n");
}

TEST_CASE("semi-naive step from one delta") {
  Program g = load("graph_variant.P");
  FactSet m = least_model(g);
  FactSet upto1;
  for (const auto &f : m.facts())
    if (m.tag(f) <= 1)
      upto1.add(f, m.tag(f));
  auto next = seminaive_step(g, upto1, m.at(1));
  CHECK(names(next) == names(m.at(2)));
  CHECK(seminaive_step(g, m, {}).empty());
}

TEST_CASE("chain deltas have size one") {
  Program p = parse_program("a.\nb :- a.\nc :- b.\n");
  FactSet m = least_model_seminaive(p);
  CHECK(m.at(0).size() == 1);
  CHECK(m.at(1).size() == 1);
  CHECK(m.at(2).size() == 1);
}

TEST_CASE("naive and semi-naive agree on random programs") {
  std::mt19937 rng(17);
  for (int i = 0; i < 100; ++i) {
    auto rp = testing::random_program(rng);
    Program p = parse_program(rp.source);
    FactSet a = least_model(p);
    FactSet b = least_model_seminaive(p);
    REQUIRE(a.size() == b.size());
    for (const auto &f : a.facts())
      CHECK(a.tag(f) == b.tag(f));
  }
}

TEST_CASE("least model is idempotent") {
  std::mt19937 rng(23);
  for (int i = 0; i < 50; ++i) {
    auto rp = testing::random_program(rng);
    Program p = parse_program(rp.source);
    FactSet m = least_model(p);
    Program q = p;
    for (const auto &f : m.facts())
      q.add_clause(Clause{f, {}, 0});
    CHECK(names(least_model(q).facts()) == names(m.facts()));
  }
}

TEST_CASE("fragment checks") {
  CHECK_THROWS_AS(least_model(parse_program("p(X).\n")), OracleError);
  CHECK_THROWS_AS(least_model(parse_program("p(X,Y) :- q(X).\nq(a).\n")),
                  OracleError);
  CHECK_THROWS_AS(least_model(parse_program("p(X) :- q(X), X \\= a.\nq(a).\n")),
                  OracleError);
  OracleOptions small;
  small.iteration_cap = 50;
  CHECK_THROWS_AS(least_model(parse_program("n(z).\nn(s(X)) :- n(X).\n"), small),
                  ResourceError);
}

TEST_CASE("theorem 1 conditions") {
  auto p = PredKey{intern("p"), 2};
  auto r1 = check_theorem1_conditions(load("graph_variant.P"), p);
  CHECK(r1.reachable_ok);
  CHECK(r1.bodies_ok);

  auto p1 = PredKey{intern("p"), 1};
  auto r2 = check_theorem1_conditions(load("unreachable.P"), p1);
  CHECK_FALSE(r2.reachable_ok);
  CHECK(r2.bodies_ok);
  CHECK(r2.witness.find("r/1") != std::string::npos);

  auto r3 = check_theorem1_conditions(load("unsat_body.P"), p1);
  CHECK(r3.reachable_ok);
  CHECK_FALSE(r3.bodies_ok);
}

TEST_CASE("engine diff on the example programs") {
  auto d1 = diff_with_engine(load("graph_variant.P"), "p(a,X)");
  CHECK(d1.answers_ok);
  CHECK(d1.expected == std::vector<std::string>{"p(a,b)", "p(a,c)"});
  CHECK(d1.model_checked);
  CHECK(d1.model_ok);

  auto d2 = diff_with_engine(load("join_stwfa.P"), "p(X,Y)");
  CHECK(d2.ok());
  CHECK(d2.actual.size() == 13);

  EngineConfig variant;
  variant.table_all = true;
  auto d3 = diff_with_engine(load("unreachable.P"), "p(X)", variant);
  CHECK(d3.answers_ok);
  CHECK_FALSE(d3.model_checked);
}

TEST_CASE("engine agrees with the oracle on random programs") {
  std::mt19937 rng(99);
  EngineConfig cfg;
  cfg.table_all = true;
  int checked = 0;
  for (int i = 0; i < 100; ++i) {
    auto rp = testing::random_program(rng);
    Program p = parse_program(rp.source);
    for (const auto &q : rp.queries) {
      auto d = diff_with_engine(p, q, cfg);
      INFO(rp.source << "?- " << q << "\n" << d.witness);
      CHECK(d.ok());
      checked += d.model_checked;
    }
  }
  CHECK(checked > 0);
}
