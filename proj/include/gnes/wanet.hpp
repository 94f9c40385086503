#pragma once

#include <Eigen/Dense>
#include <vector>

#include "gnes/game.hpp"
#include "gnes/graph.hpp"

namespace gnes {

// A wireless ad-hoc network rate-allocation benchmark: 16 links of capacity
// 10 shared by 15 users on fixed routes, each user balancing congestion
// penalties on its route against the utility of its own rate. Routes follow a
// ring of relays with three cross-cutting users, so every user shares links
// with two to four others and the interference graph is connected.
struct WanetBenchmark {
  WanetCost cost;
  std::vector<ActionInterval> omega;

  static WanetBenchmark standard(double kappa = 2.0) {
    WanetBenchmark b;
    b.cost.paths = {
        {1, 2, 3},    // user 1
        {2, 3, 4},    // user 2
        {4, 5},       // user 3
        {5, 6, 7},    // user 4
        {6, 7, 8},    // user 5
        {8, 9},       // user 6
        {9, 10, 11},  // user 7
        {10, 11, 12}, // user 8
        {12, 13},     // user 9
        {13, 14, 15}, // user 10
        {14, 15, 16}, // user 11
        {16, 1},      // user 12
        {3, 4, 5},    // user 13
        {7, 8, 9},    // user 14
        {11, 12, 13}, // user 15
    };
    b.cost.capacity.assign(16, 10.0);
    b.cost.kappa = kappa;
    b.cost.chi.assign(15, 10.0);
    b.omega.assign(15, ActionInterval{0.0, 10.0});
    return b;
  }

  int n_users() const { return static_cast<int>(cost.paths.size()); }

  GameSpec game() const { return make_wanet_game(cost, omega); }

  PlayerGraph interference() const { return interference_from_paths(cost.paths); }

  // Low common starting rate: every link starts far from capacity even where
  // three routes overlap. (The box midpoint would overload the busiest links
  // at event zero.)
  Eigen::VectorXd benchmark_init() const {
    return Eigen::VectorXd::Constant(n_users(), 0.5);
  }
};

}  // namespace gnes
