#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "perchomog/environment.hpp"
#include "perchomog/lattice.hpp"

namespace perchomog {

// Axis-aligned box of lattice vertices given by closed coordinate ranges.
struct Box {
  int dim = 2;
  std::array<int64_t, 3> lo{0, 0, 0};
  std::array<int64_t, 3> hi{0, 0, 0};

  static Box of_cube(const TriadicCube& c);
  int64_t extent(int i) const { return hi[i] - lo[i] + 1; }
  int64_t vertex_count() const;
  bool contains(const Vertex& x) const;
  // Local linear index, same axis ordering as Window::index.
  int64_t local_index(const Vertex& x) const;
  Vertex vertex_at(int64_t local) const;
  Box intersect(const Box& other) const;  // empty extents if disjoint
  bool empty() const;
};

// Connected components of the open subgraph inside a box. Labels are
// canonical: every component is named by its lexicographically smallest
// vertex. Vertices with no incident open edge are singleton components.
struct ClusterLabeling {
  Box box;
  std::vector<int32_t> component;     // per local index: component ordinal
  std::vector<int64_t> canonical;     // per ordinal: local index of canonical vertex
  std::vector<int64_t> size;          // per ordinal: vertex count
  std::vector<std::array<int64_t, 3>> bb_lo;  // per ordinal: bounding box
  std::vector<std::array<int64_t, 3>> bb_hi;
  int32_t largest = -1;               // ordinal of max-size component (tie: min canonical)

  // Largest coordinate spread, i.e. the Chebyshev diameter of the component.
  int64_t diameter(int32_t ordinal) const;

  int32_t component_at(const Vertex& x) const { return component[box.local_index(x)]; }
};

ClusterLabeling label_clusters(const Environment& env, const Box& box);

// Components restricted to an arbitrary vertex subset of the window
// (adjacency = open edges with both endpoints in the subset).
ClusterLabeling label_clusters_subset(const Environment& env,
                                      const std::vector<int64_t>& window_indices);

// True iff for every axis there is an open path inside the box joining its
// two opposite faces. Boxes with a side of extent 1 cross that axis trivially.
bool is_crossable(const Environment& env, const Box& box);
bool is_crossable(const Environment& env, const TriadicCube& cube);

// The maximal open cluster of the box touching all 2d faces; ties broken by
// canonical label. nullopt when no component crosses.
std::optional<int32_t> crossing_component(const ClusterLabeling& labeling);

// Vertices (window indices) of the maximal crossing cluster of a cube, empty
// when none exists.
std::vector<int64_t> crossing_cluster_vertices(const Environment& env,
                                               const TriadicCube& cube);

// Largest open cluster of the whole window; the stand-in for the infinite
// cluster in experiments (which only look well inside the window).
std::vector<int64_t> largest_window_cluster(const Environment& env);

}  // namespace perchomog
