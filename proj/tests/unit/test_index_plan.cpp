#include "doctest.h"

#include <algorithm>
#include <random>
#include <set>

#include "stwa/index_plan.hpp"
#include "stwa/program.hpp"

using namespace stwa;

namespace {

std::vector<IndexSpec> specs_of(const std::string &directive) {
  Program p = parse_program(directive);
  REQUIRE(p.directives.size() == 1);
  return p.directives[0].specs;
}

IndexPlan plan_of(const std::string &directive) {
  Program p = parse_program(directive);
  return compile_index(p.directives[0]);
}

Term term(const std::string &s) {
  VarSource vs(1);
  return parse_term(s, vs);
}

std::vector<std::string> suffixes(const IndexPlan &plan) {
  std::vector<std::string> out;
  for (const auto &p : plan.permutations)
    out.push_back(p.suffix());
  return out;
}

} // namespace

TEST_CASE("bound positions are the intersection of the index sets") {
  CHECK(bound_positions(specs_of(":- table_index(p/4,[1+2,1,2+3+4,4]).")).empty());
  CHECK(bound_positions(specs_of(":- table_index(c/3,[1+3,1]).")) ==
        std::vector<int>{1});
  CHECK(bound_positions(specs_of(":- table_index(e/4,[1+2,1]).")) ==
        std::vector<int>{1});
  CHECK(bound_positions(specs_of(":- table_index(c/2,[2,0]).")).empty());
  CHECK(bound_positions(specs_of(":- table_index(p/2,[0]).")).empty());
}

TEST_CASE("p/4 needs two permutations") {
  IndexPlan plan = plan_of(":- table_index(p/4,[1+2,1,2+3+4,4]).");
  CHECK(suffixes(plan) == std::vector<std::string>{"1234", "4231"});
  CHECK(plan.assignment == std::vector<int>{0, 0, 1, 1});
  REQUIRE(plan.dispatch.size() == 2);
  CHECK(plan.dispatch[0].test_position == 1);
  CHECK(plan.dispatch[1].test_position == 4);
}

TEST_CASE("single-permutation plans") {
  CHECK(suffixes(plan_of(":- table_index(corpus_word/2,[2,0]).")) ==
        std::vector<std::string>{"21"});
  CHECK(suffixes(plan_of(":- table_index(corpus_word/3,[1+3,1]).")) ==
        std::vector<std::string>{"132"});
  CHECK(suffixes(plan_of(":- table_index(emp_data/4,[1+2,1]).")) ==
        std::vector<std::string>{"1234"});
  IndexPlan full = plan_of(":- table_index(p/2,[0]).");
  CHECK(full.has_none);
  CHECK(full.permutations.size() == 1);
}

TEST_CASE("routing follows the first tested position") {
  IndexPlan plan = plan_of(":- table_index(p/4,[1+2,1,2+3+4,4]).");
  CHECK(plan.route(term("p(a,B,C,D)")) == 0);
  CHECK(plan.route(term("p(a,b,C,D)")) == 0);
  CHECK(plan.route(term("p(A,B,C,d)")) == 1);
  CHECK(plan.route(term("p(A,b,c,d)")) == 1);
  CHECK_THROWS_AS(plan.route(term("p(A,b,C,D)")), IllegalModeError);
  CHECK(plan.illegal_mode_message() == "Illegal Mode in call to p/4");
}

TEST_CASE("abstraction keeps only bound positions") {
  VarSource vs(100);
  IndexPlan plan = plan_of(":- table_index(corpus_word/3,[1+3,1]).");
  Abstraction a = abstract_call(term("corpus_word(isbn1,S,w)"), plan, vs);
  CHECK(a.abstracted.arg(0) == Term::atom("isbn1"));
  CHECK(a.abstracted.arg(1).is_var());
  CHECK(a.abstracted.arg(2).is_var());
  CHECK(a.abstracted.arg(1).var_id() >= 100);
  CHECK_THROWS_AS(abstract_call(term("corpus_word(B,S,w)"), plan, vs),
                  IllegalModeError);

  IndexPlan open = plan_of(":- table_index(corpus_word/2,[2,0]).");
  Abstraction b = abstract_call(term("corpus_word(S,w)"), open, vs);
  CHECK(b.abstracted.arg(0).is_var());
  CHECK(b.abstracted.arg(1).is_var());
  // Unbound call under [2,0] is served by the `0` marker.
  CHECK_NOTHROW(abstract_call(term("corpus_word(S,W)"), open, vs));
}

TEST_CASE("emitted transformation matches the generated schema") {
  Program p = parse_program(":- table_index(p/4,[1+2,1,2+3+4,4]).\n"
                            "p(a,b,c,d).\n");
  std::string out = transform_program(p);
  const char *expected =
      ":- table p1234/4, p4231/4 as subsumptive.\n"
      "p(A,B,C,D) :-\n"
      "    nonvar(A) -> p1234(A,B,C,D)\n"
      "    ; nonvar(D) -> p4231(D,B,C,A)\n"
      "    ; table_error('Illegal Mode in call to p/4').\n"
      "p1234(A,B,C,D) :-\n"
      "    var(A),var(B),var(C),var(D) -> p_base(A,B,C,D)\n"
      "    ; p1234(E,F,G,H),E = A,F = B,G = C,H = D.\n"
      "p4231(A,B,C,D) :-\n"
      "    var(D),var(B),var(C),var(A) -> p1234(D,B,C,A)\n"
      "    ; p4231(E,F,G,H),E = A,F = B,G = C,H = D.\n"
      "p_base(a,b,c,d).\n";
  CHECK(out == expected);
  CHECK(permutation_pred_name(PredKey{intern("p"), 4},
                              plan_of(":- table_index(p/4,[4]).")
                                  .permutations[0]) == "p4123");
  CHECK(base_pred_name(PredKey{intern("p"), 4}) == "p_base");
}

TEST_CASE("nothing to transform") {
  CHECK_THROWS_AS(transform_program(parse_program("p(a).")),
                  std::invalid_argument);
}

namespace {

bool is_chain(std::vector<std::set<int>> sets) {
  std::sort(sets.begin(), sets.end(),
            [](const auto &a, const auto &b) { return a.size() < b.size(); });
  for (std::size_t i = 1; i < sets.size(); ++i)
    if (!std::includes(sets[i].begin(), sets[i].end(), sets[i - 1].begin(),
                       sets[i - 1].end()))
      return false;
  return true;
}

// Fewest chains covering the distinct non-empty sets, by exhaustive
// assignment.
int min_chains(const std::vector<std::set<int>> &sets) {
  int n = static_cast<int>(sets.size());
  for (int k = 1; k <= n; ++k) {
    std::vector<int> assign(static_cast<std::size_t>(n), 0);
    while (true) {
      std::vector<std::vector<std::set<int>>> groups(static_cast<std::size_t>(k));
      for (int i = 0; i < n; ++i)
        groups[static_cast<std::size_t>(assign[static_cast<std::size_t>(i)])]
            .push_back(sets[static_cast<std::size_t>(i)]);
      bool ok = true;
      for (const auto &g : groups)
        ok = ok && is_chain(g);
      if (ok)
        return k;
      int i = 0;
      while (i < n && ++assign[static_cast<std::size_t>(i)] == k)
        assign[static_cast<std::size_t>(i++)] = 0;
      if (i == n)
        break;
    }
  }
  return n;
}

} // namespace

TEST_CASE("permutation cover is minimal and covers every index") {
  std::mt19937 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    int arity = std::uniform_int_distribution<int>(1, 4)(rng);
    int nspecs = std::uniform_int_distribution<int>(1, 5)(rng);
    std::vector<IndexSpec> specs;
    std::set<std::set<int>> distinct;
    for (int s = 0; s < nspecs; ++s) {
      IndexSpec spec;
      for (int pos = 1; pos <= arity; ++pos)
        if (rng() % 2)
          spec.positions.push_back(pos);
      if (spec.positions.empty())
        spec.positions.push_back(1);
      distinct.insert({spec.positions.begin(), spec.positions.end()});
      specs.push_back(spec);
    }
    std::vector<int> assignment;
    auto cover = permutation_cover(specs, arity, &assignment);
    REQUIRE(assignment.size() == specs.size());
    for (std::size_t s = 0; s < specs.size(); ++s) {
      const auto &order =
          cover[static_cast<std::size_t>(assignment[s])].order;
      std::set<int> prefix(order.begin(),
                           order.begin() + static_cast<long>(
                                               specs[s].positions.size()));
      CHECK(prefix == std::set<int>(specs[s].positions.begin(),
                                    specs[s].positions.end()));
    }
    CHECK(static_cast<int>(cover.size()) ==
          min_chains({distinct.begin(), distinct.end()}));
  }
}
