#pragma once

#include <cstdint>
#include <optional>

#include "otd2048/engine.hpp"
#include "otd2048/network.hpp"

namespace otd {

/// A chosen move: the action, its afterstate and reward, and the score r + V(s') it won with.
struct Decision {
    Action action;
    Board afterstate;
    std::uint32_t reward;
    double score;
};

/**
 * argmax over legal actions of reward + value(afterstate); nullopt on a
 * terminal state. Ties go to the first action in Up, Right, Down, Left order.
 */
template <class ValueFn>
std::optional<Decision> greedy(Board state, ValueFn&& value, const MoveTable& moves = MoveTable::get()) {
    std::optional<Decision> best;
    for (Action a : kActions) {
        const auto r = moves.slide(state, a);
        if (!r) continue;
        const double score = static_cast<double>(r->reward) + static_cast<double>(value(r->afterstate));
        if (!best || score > best->score) best = Decision{a, r->afterstate, r->reward, score};
    }
    return best;
}

/// Greedy move under one fixed stage's value function.
inline std::optional<Decision> select_action(const Network& net, std::size_t stage, Board state) {
    return greedy(state, [&](Board b) { return net.evaluate(stage, b); }, MoveTable::get(net.cardinality()));
}

/// Greedy move with each afterstate valued by the stage it routes to.
inline std::optional<Decision> select_action(const Network& net, Board state) {
    return greedy(state, [&](Board b) { return net.value(b); }, MoveTable::get(net.cardinality()));
}

} // namespace otd
