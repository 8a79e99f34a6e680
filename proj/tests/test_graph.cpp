#include <doctest.h>

#include <random>
#include <set>

#include "oracles.hpp"
#include "sybilwatch/error.hpp"
#include "sybilwatch/graph.hpp"
#include "sybilwatch/union_find.hpp"

using namespace sybilwatch;

namespace {

AccountId id(int i) { return AccountId("a" + std::to_string(i)); }

SocialGraph make_graph(int n, const oracle::EdgeList& edges) {
  SocialGraph g;
  for (int i = 0; i < n; ++i) g.add_account({id(i), 0, Label::unknown});
  for (auto [a, b] : edges) g.add_edge(id(a), id(b), 1000 * std::min(a, b) + std::max(a, b), id(a));
  return g;
}

oracle::EdgeList random_edges(std::mt19937_64& rng, int n, double p) {
  oracle::EdgeList edges;
  std::bernoulli_distribution coin(p);
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      if (coin(rng)) edges.emplace_back(a, b);
    }
  }
  std::shuffle(edges.begin(), edges.end(), rng);
  return edges;
}

}  // namespace

TEST_CASE("account and edge errors") {
  SocialGraph g;
  g.add_account({AccountId("x"), 100, Label::unknown});
  g.add_account({AccountId("y"), 200, Label::unknown});
  CHECK_THROWS_WITH_AS(g.add_account({AccountId("x"), 0, Label::unknown}),
                       doctest::Contains("DuplicateAccount"), Error);
  CHECK_THROWS_AS(g.add_edge(AccountId("x"), AccountId("x"), 300, AccountId("x")), Error);
  CHECK_THROWS_AS(g.add_edge(AccountId("x"), AccountId("z"), 300, AccountId("x")), Error);
  CHECK_THROWS_AS(g.add_edge(AccountId("x"), AccountId("y"), 150, AccountId("x")), Error);
  g.add_edge(AccountId("x"), AccountId("y"), 300, AccountId("x"));
  try {
    g.add_edge(AccountId("y"), AccountId("x"), 400, AccountId("y"));
    FAIL("expected DuplicateEdge");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::duplicate_edge);
  }
  CHECK(g.edge_count() == 1);
  CHECK(g.degree(AccountId("x")) == 1);
}

TEST_CASE("account ids are bounded") {
  CHECK_THROWS_AS(AccountId(""), Error);
  CHECK_THROWS_AS(AccountId(std::string(65, 'a')), Error);
  CHECK(AccountId(std::string(64, 'a')).str().size() == 64);
}

TEST_CASE("clustering of small shapes") {
  auto tri = make_graph(3, {{0, 1}, {1, 2}, {0, 2}});
  for (int i = 0; i < 3; ++i) CHECK(tri.local_clustering(id(i)) == 1.0);
  auto star = make_graph(4, {{0, 1}, {0, 2}, {0, 3}});
  CHECK(star.local_clustering(id(0)) == 0.0);
  CHECK_FALSE(star.local_clustering(id(1)).has_value());
  auto k4_minus = make_graph(4, {{0, 1}, {0, 2}, {0, 3}, {1, 2}});
  CHECK(*k4_minus.local_clustering(id(0)) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("clustering matches triangle enumeration on random graphs") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 60);
    const double p = 0.02 + 0.5 * static_cast<double>(rng() % 100) / 100.0;
    const auto edges = random_edges(rng, n, p);
    const auto g = make_graph(n, edges);
    const auto want = oracle::clustering_by_enumeration(n, edges);
    for (int v = 0; v < n; ++v) REQUIRE(g.local_clustering(id(v)) == want[v]);
  }
}

TEST_CASE("neighbors are sorted and graph equality ignores insertion order") {
  const oracle::EdgeList edges{{0, 3}, {0, 1}, {2, 0}, {1, 2}};
  auto a = make_graph(4, edges);
  auto rev = edges;
  std::reverse(rev.begin(), rev.end());
  auto b = make_graph(4, rev);
  const auto nb = a.neighbors(id(0));
  CHECK(std::is_sorted(nb.begin(), nb.end()));
  CHECK(nb.size() == 3);
  CHECK(a == b);
  b.add_account({id(9), 0, Label::unknown});
  CHECK_FALSE(a == b);
}

TEST_CASE("graph_from_events builds accepted edges only") {
  std::vector<Event> ev{Event::account_created(0, AccountId("p")),
                        Event::account_created(0, AccountId("q")),
                        Event::request_sent(5, AccountId("p"), AccountId("q")),
                        Event::request_rejected(6, AccountId("p"), AccountId("q")),
                        Event::request_sent(7, AccountId("q"), AccountId("p")),
                        Event::request_accepted(9, AccountId("q"), AccountId("p"))};
  const auto g = graph_from_events(ev);
  REQUIRE(g.edge_count() == 1);
  CHECK(g.edges()[0].created_at == 9);
  CHECK(g.account(g.edges()[0].initiator).id == AccountId("q"));
}

TEST_CASE("union-find agrees with BFS") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 300);
    const auto edges = random_edges(rng, n, 1.5 / n);
    UnionFind uf(n);
    for (auto [a, b] : edges) uf.unite(a, b);
    const auto comps = oracle::components_by_bfs(n, edges);
    CHECK(uf.component_count() == comps.size());
    for (const auto& c : comps) {
      for (int v : c) CHECK(uf.same(v, c.front()));
      CHECK(uf.component_size(c.front()) == c.size());
    }
  }
}
