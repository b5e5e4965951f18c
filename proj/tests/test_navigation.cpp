#include <doctest.h>

#include <random>

#include "mrta/errors.hpp"
#include "mrta/navigation.hpp"
#include "oracles.hpp"

using namespace mrta;

namespace {

RoomQueue make_queue(int room = 0, std::size_t slots = 3) {
    RoomQueue q;
    q.room_id = room;
    for (std::size_t k = 0; k < slots; ++k) q.slots.push_back({static_cast<double>(k), -1.0});
    return q;
}

}  // namespace

TEST_CASE("roadway network") {
    RoadwayNetwork net({{0, 0}, {10, 0}, {0, 10}});
    net.add_route(0, 1, {{0, 0}, {5, -1}, {10, 0}});
    CHECK(net.has_authored_route(0, 1));
    CHECK_FALSE(net.has_authored_route(1, 0));
    CHECK(net.route(1, 0) == std::vector<Vec2>{{10, 0}, {0, 0}});
    CHECK(net.route(2, 2) == std::vector<Vec2>{{0, 10}});
    CHECK(net.nearest_location({1, 8}) == 2);
    CHECK_THROWS_AS(net.add_route(0, 2, {{1, 0}, {0, 10}}), InvalidInput);
    CHECK_THROWS_AS(net.add_route(0, 7, {{0, 0}}), InvalidInput);
    CHECK_THROWS_AS(net.location(3), InvalidInput);
}

TEST_CASE("request_slot") {
    auto q = make_queue();
    CHECK(request_slot(q, 4) == 0u);
    CHECK(q.holder == 4);
    CHECK(request_slot(q, 7) == 1u);
    CHECK(q.holder == 4);
    const auto before = q.occupants;
    CHECK(request_slot(q, 7) == 1u);
    CHECK(q.occupants == before);
    CHECK(request_slot(q, 8) == 2u);
    CHECK_FALSE(request_slot(q, 9).has_value());  // full
}

TEST_CASE("release") {
    const Vec2 room{0, 0};
    SUBCASE("holder walks away") {
        auto q = make_queue();
        request_slot(q, 1);
        request_slot(q, 2);
        CHECK_FALSE(release(q, 1, {1.9, 0}, room, 2.0));
        CHECK(release(q, 1, {2.0 + 1e-6, 0}, room, 2.0));
        CHECK(q.holder == 2);
        CHECK(q.occupants == std::vector<int>{2});
    }
    SUBCASE("holder out of tasks while still near") {
        auto q = make_queue();
        request_slot(q, 1);
        request_slot(q, 2);
        CHECK(release(q, 1, {0.1, 0}, room, 2.0, true));
        CHECK(q.holder == 2);
    }
    SUBCASE("sole occupant") {
        auto q = make_queue();
        request_slot(q, 1);
        CHECK(release(q, 1, {5, 0}, room, 2.0));
        CHECK(q.occupants.empty());
        CHECK_FALSE(q.holder.has_value());
    }
    SUBCASE("non-member is a no-op") {
        auto q = make_queue();
        CHECK_FALSE(release(q, 3, {9, 9}, room, 2.0));
    }
}

TEST_CASE("FIFO grant order under random interleavings") {
    std::mt19937_64 rng(77);
    std::uniform_int_distribution<int> robot(0, 5), op(0, 2);
    for (int run = 0; run < 100; ++run) {
        auto q = make_queue(0, 3);
        oracle::FifoModel model{3, {}};
        std::vector<int> grants, model_grants;
        std::optional<int> last_holder, last_model;
        for (int step = 0; step < 60; ++step) {
            const int r = robot(rng);
            switch (op(rng)) {
                case 0: CHECK(request_slot(q, r) == model.request(r)); break;
                case 1: CHECK(release(q, r, {10, 0}, {0, 0}, 2.0) == model.remove(r)); break;
                default: CHECK(withdraw(q, r) == model.remove(r)); break;
            }
            CHECK(q.occupants == std::vector<int>(model.order.begin(), model.order.end()));
            if (q.holder && q.holder != last_holder) grants.push_back(*q.holder);
            if (model.holder() && model.holder() != last_model) model_grants.push_back(*model.holder());
            last_holder = q.holder;
            last_model = model.holder();
        }
        CHECK(grants == model_grants);
    }
}

TEST_CASE("expand_actions") {
    RoadwayNetwork net({{0, 0}, {10, 0}, {10, 10}});
    net.add_route(0, 1, {{0, 0}, {3, 1}, {7, 1}, {10, 0}});
    SUBCASE("already at the only location") {
        const auto p = expand_actions({0}, net, {0.1, 0});
        REQUIRE(p.pending.size() == 1);
        CHECK(p.pending[0].location == 0);
    }
    SUBCASE("route concatenation") {
        const auto p = expand_actions({0, 1}, net, {0, 0});
        REQUIRE(p.pending.size() == 4);
        CHECK(p.pending[0].location == 0);
        CHECK(p.pending[1].position == Vec2(3, 1));
        CHECK(p.pending[2].position == Vec2(7, 1));
        CHECK(p.pending[3].location == 1);
        CHECK(p.pending[3].position == Vec2(10, 0));
    }
    SUBCASE("gated room ends at the last queue slot") {
        std::map<int, RoomQueue> queues;
        queues[2] = make_queue(2, 3);
        queues[2].slots = {{10, 8}, {10, 7}, {10, 6}};
        const auto p = expand_actions({1, 2}, net, {0, 0}, queues, 0, 5);
        REQUIRE_FALSE(p.pending.empty());
        CHECK(p.pending.back().hold);
        CHECK(p.pending.back().queue_room == 2);
        CHECK(p.pending.back().position == Vec2(10, 6));

        // Queue index 2 -> 1 moves the hold one slot forward; index 0 as holder opens the room.
        auto q = queues[2];
        request_slot(q, 9);
        request_slot(q, 5);
        auto moved = on_queue_position(p, q, 1, {10, 10});
        CHECK(moved.pending.back().position == Vec2(10, 7));
        withdraw(q, 9);
        auto open = on_queue_position(moved, q, 0, {10, 10});
        CHECK_FALSE(open.pending[open.pending.size() - 2].hold);
        CHECK(open.pending.back().location == 2);
    }
    SUBCASE("unknown location") {
        CHECK_THROWS_AS(expand_actions({4}, net, {0, 0}), InvalidInput);
    }
}

TEST_CASE("record_arrival") {
    WaypointPlan p;
    const Waypoint a{{0, 0}, 0}, b{{1, 0}, -1}, c{{2, 0}, 1};
    p = record_arrival(p, a, 1.0);
    p = record_arrival(p, b, 2.0);
    p = record_arrival(p, b, 2.0);  // duplicate in the same tick
    p = record_arrival(p, c, 3.5);
    REQUIRE(p.arrivals.size() == 3);
    CHECK(p.arrivals[0].time < p.arrivals[1].time);
    CHECK(p.arrivals[1].time < p.arrivals[2].time);
    CHECK(p.arrivals[2].location == 1);
}
