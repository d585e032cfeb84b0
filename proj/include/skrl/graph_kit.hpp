#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <unordered_map>
#include <utility>
#include <vector>

#include "skrl/errors.hpp"

namespace skrl::graph_kit {

// Graphs live on [n] with n <= 11 so the C(n,2) <= 55 possible edges fit one
// 64-bit word. Edge {i,j} (i<j) occupies bit i*(2n-i-1)/2 + (j-i-1); the bit
// order is exactly the sorted (min,max) edge-list order, so mask equality is
// canonical-form equality.

inline constexpr int max_graph_n = 11;
inline constexpr int gamma_sc_cap = 8; // full closed-graph enumeration cap
inline constexpr int scan_cap = 6;     // exhaustive phi/psi scan cap

inline int edge_index(int i, int j, int n) {
    if (i > j) std::swap(i, j);
    return i * (2 * n - i - 1) / 2 + (j - i - 1);
}

namespace detail {

struct EdgeDecode {
    std::array<std::uint8_t, 56> ei{};
    std::array<std::uint8_t, 56> ej{};
};

inline const EdgeDecode& edge_decode(int n) {
    static const std::array<EdgeDecode, max_graph_n + 1> tables = [] {
        std::array<EdgeDecode, max_graph_n + 1> t{};
        for (int m = 2; m <= max_graph_n; ++m) {
            int b = 0;
            for (int i = 0; i < m; ++i)
                for (int j = i + 1; j < m; ++j, ++b) {
                    t[m].ei[b] = static_cast<std::uint8_t>(i);
                    t[m].ej[b] = static_cast<std::uint8_t>(j);
                }
        }
        return t;
    }();
    return tables[n];
}

inline std::uint32_t vertex_mask_of(std::uint64_t edges, int n) {
    const EdgeDecode& d = edge_decode(n);
    std::uint32_t vm = 0;
    while (edges) {
        int b = std::countr_zero(edges);
        edges &= edges - 1;
        vm |= (1u << d.ei[b]) | (1u << d.ej[b]);
    }
    return vm;
}

} // namespace detail

struct LabeledGraph {
    int n = 0;
    std::uint64_t edges = 0;

    static LabeledGraph empty(int n) { return LabeledGraph{n, 0}; }

    bool has_edge(int i, int j) const { return (edges >> edge_index(i, j, n)) & 1; }

    LabeledGraph with_edge(int i, int j) const {
        LabeledGraph g = *this;
        g.edges |= std::uint64_t{1} << edge_index(i, j, n);
        return g;
    }

    int edge_count() const { return std::popcount(edges); }

    std::uint32_t vertex_mask() const { return detail::vertex_mask_of(edges, n); }

    int vertex_count() const { return std::popcount(vertex_mask()); }

    int degree(int v) const {
        const auto& d = detail::edge_decode(n);
        std::uint64_t m = edges;
        int deg = 0;
        while (m) {
            int b = std::countr_zero(m);
            m &= m - 1;
            if (d.ei[b] == v || d.ej[b] == v) ++deg;
        }
        return deg;
    }

    std::vector<std::pair<int, int>> edge_list() const {
        const auto& d = detail::edge_decode(n);
        std::vector<std::pair<int, int>> out;
        std::uint64_t m = edges;
        while (m) {
            int b = std::countr_zero(m);
            m &= m - 1;
            out.emplace_back(d.ei[b], d.ej[b]);
        }
        return out;
    }

    friend bool operator==(const LabeledGraph&, const LabeledGraph&) = default;
};

struct MultiGraph2 {
    int n = 0;
    std::uint64_t mult1 = 0; // edges of multiplicity 1
    std::uint64_t mult2 = 0; // edges of multiplicity 2

    friend bool operator==(const MultiGraph2&, const MultiGraph2&) = default;
};

enum class GraphClass { simple, simple_closed, cycle, self_avoiding_path, none };

struct PsiSplit {
    LabeledGraph psi1;
    LabeledGraph psi2;
};

namespace detail {

inline void degrees_of(const LabeledGraph& g, std::array<int, max_graph_n>& deg) {
    deg.fill(0);
    const auto& d = edge_decode(g.n);
    std::uint64_t m = g.edges;
    while (m) {
        int b = std::countr_zero(m);
        m &= m - 1;
        ++deg[d.ei[b]];
        ++deg[d.ej[b]];
    }
}

inline bool connected_on_support(const LabeledGraph& g) {
    std::uint32_t vm = g.vertex_mask();
    if (!vm) return true;
    int start = std::countr_zero(vm);
    std::uint32_t seen = 1u << start;
    std::uint32_t frontier = seen;
    while (frontier) {
        std::uint32_t next = 0;
        for (std::uint32_t f = frontier; f;) {
            int v = std::countr_zero(f);
            f &= f - 1;
            for (std::uint32_t rest = vm & ~seen; rest;) {
                int u = std::countr_zero(rest);
                rest &= rest - 1;
                if (g.has_edge(v, u)) next |= 1u << u;
            }
        }
        seen |= next;
        frontier = next;
    }
    return seen == vm;
}

} // namespace detail

inline GraphClass classify(const LabeledGraph& g) {
    if (g.edges == 0) return GraphClass::simple_closed;
    std::array<int, max_graph_n> deg;
    detail::degrees_of(g, deg);
    bool all_even = true;
    bool all_two = true;
    int odd_one = 0, other_bad = 0;
    for (int v = 0; v < g.n; ++v) {
        if (deg[v] == 0) continue;
        if (deg[v] % 2) all_even = false;
        if (deg[v] != 2) all_two = false;
        if (deg[v] == 1)
            ++odd_one;
        else if (deg[v] != 2)
            ++other_bad;
    }
    if (all_even) {
        if (all_two && detail::connected_on_support(g)) return GraphClass::cycle;
        return GraphClass::simple_closed;
    }
    if (odd_one == 2 && other_bad == 0 && detail::connected_on_support(g))
        return GraphClass::self_avoiding_path;
    return GraphClass::simple;
}

// Gamma_sc[n] = cycle space of K_n, spanned by the fundamental triangles
// {0,i},{0,j},{i,j} of the star spanning tree at 0. A Gray-code walk flips one
// basis element per step.
template <class F>
void enumerate_closed_graphs(int n, int max_edges, F&& f) {
    if (n < 1) throw invalid_dimension_error("enumerate_closed_graphs: n must be positive");
    if (n > gamma_sc_cap)
        throw resource_limit_error("enumerate_closed_graphs: n exceeds the closed-graph enumeration cap");
    std::vector<std::uint64_t> basis;
    for (int i = 1; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            basis.push_back((std::uint64_t{1} << edge_index(0, i, n)) |
                            (std::uint64_t{1} << edge_index(0, j, n)) |
                            (std::uint64_t{1} << edge_index(i, j, n)));
    std::uint64_t total = std::uint64_t{1} << basis.size();
    LabeledGraph g{n, 0};
    for (std::uint64_t k = 0;; ++k) {
        if (max_edges < 0 || g.edge_count() <= max_edges) f(g);
        if (k + 1 == total) break;
        g.edges ^= basis[std::countr_zero(k + 1)];
    }
}

inline std::uint64_t count_closed_graphs(int n) {
    std::uint64_t c = 0;
    enumerate_closed_graphs(n, -1, [&](const LabeledGraph&) { ++c; });
    return c;
}

namespace detail {

// Simple paths a -> b over the complete graph on [n]; the closing edge {a,b}
// is appended to every found path.
template <class F>
void cycles_through_edge(int n, int a, int b, int max_len, F&& f) {
    std::uint64_t close_bit = std::uint64_t{1} << edge_index(a, b, n);
    std::array<int, max_graph_n + 1> stack{};
    struct Frame {
        int v;
        int next;
    };
    std::array<Frame, max_graph_n + 1> fr{};
    std::array<std::uint64_t, max_graph_n + 1> emask{};
    int depth = 0;
    fr[0] = {a, 0};
    emask[0] = 0;
    std::uint32_t visited = (1u << a);
    stack[0] = a;
    while (depth >= 0) {
        Frame& top = fr[depth];
        if (top.next >= n || depth + 1 >= max_len) {
            visited &= ~(1u << top.v);
            --depth;
            continue;
        }
        int u = top.next++;
        if (visited & (1u << u)) continue;
        if (u == b) {
            if (depth >= 1) {
                LabeledGraph g{n, emask[depth] |
                                      (std::uint64_t{1} << edge_index(top.v, b, n)) | close_bit};
                f(g);
            }
            continue;
        }
        std::uint64_t ne = emask[depth] | (std::uint64_t{1} << edge_index(top.v, u, n));
        ++depth;
        fr[depth] = {u, 0};
        emask[depth] = ne;
        visited |= 1u << u;
    }
}

} // namespace detail

// All cycles on [n] with at most max_len edges, optionally through a required
// edge. Anchored at the smallest vertex with direction fixed by comparing the
// anchor's two neighbors, so each cycle appears exactly once.
template <class F>
void enumerate_cycles(int n, std::optional<std::pair<int, int>> required_edge, int max_len, F&& f) {
    if (n > max_graph_n) throw resource_limit_error("enumerate_cycles: n exceeds the graph word size");
    if (n < 3 || max_len < 3) return;
    if (required_edge) {
        auto [a, b] = *required_edge;
        if (a == b || a < 0 || b < 0 || a >= n || b >= n)
            throw std::invalid_argument("enumerate_cycles: bad required edge");
        detail::cycles_through_edge(n, a, b, max_len, f);
        return;
    }
    // anchor = minimum vertex of the cycle; walk from the anchor to its larger
    // neighbor last: emit a path anchor -> ... -> v plus edge {v, anchor} only
    // when first-step vertex < v, cutting the two traversal directions to one.
    for (int a = 0; a + 2 < n; ++a) {
        struct Frame {
            int v;
            int next;
        };
        std::array<Frame, max_graph_n + 1> fr{};
        std::array<std::uint64_t, max_graph_n + 1> emask{};
        int depth = 0;
        fr[0] = {a, a + 1};
        emask[0] = 0;
        std::uint32_t visited = 1u << a;
        int first_step = -1;
        while (depth >= 0) {
            Frame& top = fr[depth];
            if (depth >= 2 && top.next == a + 1 && first_step < top.v) {
                // close the cycle back to the anchor (depth edges so far + 1)
                if (depth + 1 <= max_len) {
                    LabeledGraph g{n, emask[depth] | (std::uint64_t{1} << edge_index(a, top.v, n))};
                    f(g);
                }
            }
            if (top.next >= n || depth + 1 >= max_len) {
                visited &= ~(1u << top.v);
                --depth;
                continue;
            }
            int u = top.next++;
            if (visited & (1u << u)) continue;
            if (depth == 0) first_step = u;
            std::uint64_t ne = emask[depth] | (std::uint64_t{1} << edge_index(top.v, u, n));
            ++depth;
            fr[depth] = {u, a + 1};
            emask[depth] = ne;
            visited |= 1u << u;
        }
    }
}

// All self-avoiding paths i -> j on [n] with at most max_len edges.
template <class F>
void enumerate_saps(int i, int j, int n, int max_len, F&& f) {
    if (i == j) throw std::invalid_argument("enumerate_saps: endpoints must differ");
    if (i < 0 || j < 0 || i >= n || j >= n)
        throw std::invalid_argument("enumerate_saps: endpoint out of range");
    if (n > max_graph_n) throw resource_limit_error("enumerate_saps: n exceeds the graph word size");
    if (max_len < 1) return;
    struct Frame {
        int v;
        int next;
    };
    std::array<Frame, max_graph_n + 1> fr{};
    std::array<std::uint64_t, max_graph_n + 1> emask{};
    int depth = 0;
    fr[0] = {i, 0};
    emask[0] = 0;
    std::uint32_t visited = 1u << i;
    while (depth >= 0) {
        Frame& top = fr[depth];
        if (top.next >= n || depth >= max_len) {
            visited &= ~(1u << top.v);
            --depth;
            continue;
        }
        int u = top.next++;
        if (visited & (1u << u)) continue;
        std::uint64_t ne = emask[depth] | (std::uint64_t{1} << edge_index(top.v, u, n));
        if (u == j) {
            LabeledGraph g{n, ne};
            f(g);
            continue; // a self-avoiding path cannot pass through its endpoint
        }
        ++depth;
        fr[depth] = {u, 0};
        emask[depth] = ne;
        visited |= 1u << u;
    }
}

// Greedy Veblen peeling: walk from any vertex of positive degree along unused
// edges until a vertex repeats, extract that cycle, repeat.
inline std::vector<LabeledGraph> veblen_decompose(const LabeledGraph& g) {
    {
        std::array<int, max_graph_n> deg;
        detail::degrees_of(g, deg);
        for (int v = 0; v < g.n; ++v)
            if (deg[v] % 2) throw std::invalid_argument("veblen_decompose: graph is not closed");
    }
    std::vector<LabeledGraph> cycles;
    std::uint64_t residual = g.edges;
    while (residual) {
        std::uint32_t vm = detail::vertex_mask_of(residual, g.n);
        int start = std::countr_zero(vm);
        std::array<int, 4 * max_graph_n> walk{};
        std::array<std::uint64_t, 4 * max_graph_n> used{};
        std::uint32_t on_walk = 1u << start;
        walk[0] = start;
        used[0] = 0;
        int len = 0;
        for (;;) {
            int v = walk[len];
            int u = -1;
            for (int c = 0; c < g.n; ++c) {
                if (c == v) continue;
                std::uint64_t bit = std::uint64_t{1} << edge_index(v, c, g.n);
                if ((residual & bit) && !(used[len] & bit)) {
                    u = c;
                    break;
                }
            }
            // even degrees guarantee the walk can always continue until a repeat
            std::uint64_t bit = std::uint64_t{1} << edge_index(v, u, g.n);
            ++len;
            walk[len] = u;
            used[len] = used[len - 1] | bit;
            if (on_walk & (1u << u)) {
                int first = 0;
                while (walk[first] != u) ++first;
                std::uint64_t cyc = 0;
                for (int t = first; t < len; ++t)
                    cyc |= std::uint64_t{1} << edge_index(walk[t], walk[t + 1], g.n);
                cycles.push_back(LabeledGraph{g.n, cyc});
                residual ^= cyc;
                break;
            }
            on_walk |= 1u << u;
        }
    }
    return cycles;
}

inline LabeledGraph phi_compose(const LabeledGraph& gamma, const LabeledGraph& tau) {
    if (gamma.n != tau.n) throw invalid_dimension_error("phi_compose: mismatched ambient sets");
    if (gamma.edges & tau.edges)
        throw domain_violation_error("phi_compose: cycle and closed graph share an edge");
    if (classify(gamma) != GraphClass::cycle)
        throw domain_violation_error("phi_compose: first argument is not a cycle");
    return LabeledGraph{gamma.n, gamma.edges | tau.edges};
}

inline PsiSplit psi_split(const LabeledGraph& gamma, const LabeledGraph& tau) {
    if (gamma.n != tau.n) throw invalid_dimension_error("psi_split: mismatched ambient sets");
    return PsiSplit{LabeledGraph{gamma.n, gamma.edges ^ tau.edges},
                    LabeledGraph{gamma.n, gamma.edges & tau.edges}};
}

struct PhiCollision {
    LabeledGraph gamma1, tau1, gamma2, tau2, image;
};

struct PhiInjectivityReport {
    bool injective = true;
    std::vector<PhiCollision> collisions;
};

// Exhaustive scan of S_ij = {(gamma, tau): {i,j} in gamma, |V_gamma ^ V_tau| <= 1}.
inline PhiInjectivityReport check_phi_injectivity(int i, int j, int n) {
    if (i == j) throw std::invalid_argument("check_phi_injectivity: i == j");
    if (n > scan_cap) throw resource_limit_error("check_phi_injectivity: n exceeds the scan cap");
    struct Tau {
        std::uint64_t edges;
        std::uint32_t vm;
    };
    std::vector<Tau> taus;
    enumerate_closed_graphs(n, -1, [&](const LabeledGraph& t) {
        taus.push_back({t.edges, t.vertex_mask()});
    });
    PhiInjectivityReport rep;
    std::unordered_map<std::uint64_t, std::pair<std::uint64_t, std::uint64_t>> seen;
    enumerate_cycles(n, std::make_pair(i, j), n, [&](const LabeledGraph& c) {
        std::uint32_t cvm = c.vertex_mask();
        for (const Tau& t : taus) {
            if (std::popcount(cvm & t.vm) > 1) continue;
            std::uint64_t image = c.edges | t.edges; // edge-disjoint: <=1 shared vertex
            auto [it, fresh] = seen.emplace(image, std::make_pair(c.edges, t.edges));
            if (!fresh) {
                rep.injective = false;
                rep.collisions.push_back({LabeledGraph{n, it->second.first},
                                          LabeledGraph{n, it->second.second}, c,
                                          LabeledGraph{n, t.edges}, LabeledGraph{n, image}});
            }
        }
    });
    return rep;
}

// All (gamma, tau) in Gamma_loop x Gamma_sc on [n] with psi(gamma, tau) == (eta1, eta2).
inline std::vector<std::pair<LabeledGraph, LabeledGraph>> psi_preimage(const LabeledGraph& eta1,
                                                                       const LabeledGraph& eta2,
                                                                       int n) {
    if (n > scan_cap) throw resource_limit_error("psi_preimage: n exceeds the scan cap");
    std::vector<std::uint64_t> taus;
    enumerate_closed_graphs(n, -1, [&](const LabeledGraph& t) { taus.push_back(t.edges); });
    std::vector<std::pair<LabeledGraph, LabeledGraph>> out;
    enumerate_cycles(n, std::nullopt, n, [&](const LabeledGraph& c) {
        for (std::uint64_t t : taus) {
            if ((c.edges ^ t) == eta1.edges && (c.edges & t) == eta2.edges)
                out.emplace_back(c, LabeledGraph{n, t});
        }
    });
    return out;
}

// |A_{k,l}| on [n]: closed graphs with k vertices and k+l edges.
inline std::uint64_t count_a_kl(int n, int k, int l) {
    if (k + l > k * (k - 1) / 2) return 0; // K_k cannot host k+l edges
    std::uint64_t c = 0;
    enumerate_closed_graphs(n, -1, [&](const LabeledGraph& g) {
        if (g.vertex_count() == k && g.edge_count() == k + l) ++c;
    });
    return c;
}

// T_eta1^{ij} with the large-graph threshold k_N^2 replaced by cutoff:
// psi2 images over {(gamma,tau): {i,j} in gamma, |V^V| >= 2, |gamma| < cutoff,
// psi1 == eta1}.
inline std::vector<LabeledGraph> build_t_set(const LabeledGraph& eta1, int i, int j, int n,
                                             int cutoff) {
    if (i == j) throw std::invalid_argument("build_t_set: i == j");
    if (n > scan_cap) throw resource_limit_error("build_t_set: n exceeds the scan cap");
    struct Tau {
        std::uint64_t edges;
        std::uint32_t vm;
    };
    std::vector<Tau> taus;
    enumerate_closed_graphs(n, -1, [&](const LabeledGraph& t) {
        taus.push_back({t.edges, t.vertex_mask()});
    });
    std::vector<LabeledGraph> out;
    enumerate_cycles(n, std::make_pair(i, j), n, [&](const LabeledGraph& c) {
        if (c.edge_count() >= cutoff) return;
        std::uint32_t cvm = c.vertex_mask();
        for (const Tau& t : taus) {
            if (std::popcount(cvm & t.vm) < 2) continue;
            if ((c.edges ^ t.edges) != eta1.edges) continue;
            LabeledGraph psi2{n, c.edges & t.edges};
            bool dup = false;
            for (const auto& s : out)
                if (s.edges == psi2.edges) {
                    dup = true;
                    break;
                }
            if (!dup) out.push_back(psi2);
        }
    });
    std::sort(out.begin(), out.end(),
              [](const LabeledGraph& a, const LabeledGraph& b) { return a.edges < b.edges; });
    return out;
}

} // namespace skrl::graph_kit

template <>
struct std::hash<skrl::graph_kit::LabeledGraph> {
    std::size_t operator()(const skrl::graph_kit::LabeledGraph& g) const noexcept {
        return std::hash<std::uint64_t>{}(g.edges * 0x9E3779B97F4A7C15ull + g.n);
    }
};
