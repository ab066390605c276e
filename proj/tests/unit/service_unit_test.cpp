// Copyright 2026 The atomics Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <thread>

#include <gtest/gtest.h>

#include "atomics/core/broadcast.hpp"
#include "atomics/service/command.hpp"
#include "atomics/service/lease.hpp"
#include "atomics/service/telemetry.hpp"
#include "test_util.hpp"

namespace atomics::service {
namespace {

using nlohmann::json;

TEST(Broadcast, TwoSubscribersSeeIdenticalSequences) {
  Broadcast<int> bus;
  auto a = bus.subscribe(1000);
  for (int i = 0; i < 10; ++i) bus.publish(i);
  auto b = bus.subscribe(1000);  // joins late
  for (int i = 10; i < 50; ++i) bus.publish(i);
  std::vector<Broadcast<int>::Delivered> da, db;
  while (auto d = a->try_pop()) da.push_back(*d);
  while (auto d = b->try_pop()) db.push_back(*d);
  ASSERT_EQ(da.size(), 50u);
  ASSERT_EQ(db.size(), 40u);
  for (std::size_t i = 0; i < da.size(); ++i) EXPECT_EQ(da[i].sequence, i);
  // Over the overlap both saw the same events in the same order.
  for (std::size_t i = 0; i < db.size(); ++i) {
    EXPECT_EQ(db[i].sequence, i);
    EXPECT_EQ(db[i].event, da[i + 10].event);
  }
}

TEST(Broadcast, SleepingSubscriberOverflowsOnBufferBudget) {
  // 60 s asleep at 10 Hz is 600 events against a 256-event buffer.
  Broadcast<int> bus;
  auto sleeper = bus.subscribe(256);
  auto reader = bus.subscribe(256);
  int overflow_at = -1;
  for (int i = 0; i < 600; ++i) {
    bus.publish(i);
    while (reader->try_pop()) {
    }
    if (overflow_at < 0 && sleeper->overflowed()) overflow_at = i;
  }
  EXPECT_EQ(overflow_at, 256);
  EXPECT_TRUE(sleeper->closed());
  EXPECT_FALSE(sleeper->try_pop());
  EXPECT_FALSE(reader->overflowed());
  EXPECT_EQ(bus.subscriber_count(), 1u);
}

TEST(Broadcast, FilterAndDroppedHandles) {
  Broadcast<int> bus;
  auto even = bus.subscribe(10, [](int v) { return v % 2 == 0; });
  {
    auto gone = bus.subscribe(10);
  }
  for (int i = 0; i < 6; ++i) bus.publish(i);
  std::vector<int> got;
  while (auto d = even->try_pop()) got.push_back(d->event);
  EXPECT_EQ(got, (std::vector<int>{0, 2, 4}));
  EXPECT_EQ(bus.subscriber_count(), 1u);
}

TEST(Broadcast, PopWaitsForPublisher) {
  Broadcast<int> bus;
  auto s = bus.subscribe();
  std::thread t([&] {
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
    bus.publish(7);
  });
  const auto d = s->pop(std::chrono::seconds(5));
  t.join();
  ASSERT_TRUE(d);
  EXPECT_EQ(d->event, 7);
}

TEST(Lease, SingleOperatorWithHeartbeat) {
  double now = 0.0;
  OperatorLease lease("s3cret", 30.0, [&] { return now; });
  const auto a = lease.acquire("alice");
  ASSERT_TRUE(a.granted);
  EXPECT_EQ(a.token.size(), 64u);
  EXPECT_TRUE(lease.authorized(a.token));
  EXPECT_FALSE(lease.authorized(""));
  EXPECT_FALSE(lease.authorized(std::string(64, '0')));

  const auto b = lease.acquire("bob");
  EXPECT_FALSE(b.granted);
  EXPECT_EQ(b.holder, "alice");

  now = 29.0;
  EXPECT_TRUE(lease.renew(a.token).granted);
  now = 58.0;  // 29 s after the heartbeat
  EXPECT_TRUE(lease.authorized(a.token));
  EXPECT_FALSE(lease.acquire("bob").granted);
  now = 59.5;  // heartbeat missed
  EXPECT_FALSE(lease.authorized(a.token));
  EXPECT_FALSE(lease.renew(a.token).granted);
  EXPECT_FALSE(lease.holder());

  const auto b2 = lease.acquire("bob");
  ASSERT_TRUE(b2.granted);
  EXPECT_NE(b2.token, a.token);
  EXPECT_FALSE(lease.authorized(a.token));
  EXPECT_FALSE(lease.release(a.token));
  EXPECT_TRUE(lease.release(b2.token));
  EXPECT_FALSE(lease.authorized(b2.token));
  EXPECT_TRUE(lease.acquire("alice").granted);
}

TEST(Lease, ReacquireBySameClientKeepsToken) {
  double now = 0.0;
  OperatorLease lease("", 30.0, [&] { return now; });
  const auto a = lease.acquire("console");
  now = 10.0;
  const auto again = lease.acquire("console");
  EXPECT_TRUE(again.granted);
  EXPECT_EQ(again.token, a.token);
}

TEST(CommandEnvelope, JsonRoundTripAndErrors) {
  const CommandEnvelope c = CommandEnvelope::from_json(
      {{"id", "x1"}, {"verb", "SetTilt"}, {"args", {{"degrees", 5}}}, {"issued_by", "console"}});
  EXPECT_EQ(c.verb, align::Verb::SetTilt);
  EXPECT_EQ(CommandEnvelope::from_json(c.to_json()).to_json(), c.to_json());
  EXPECT_ERROR_CODE(CommandEnvelope::from_json({{"verb", "Abort"}}), ErrorCode::ValidationError);
  EXPECT_ERROR_CODE(CommandEnvelope::from_json({{"id", "a"}, {"verb", "Fly"}}), ErrorCode::ValidationError);
  EXPECT_ERROR_CODE(CommandEnvelope::from_json({{"id", "a"}, {"verb", "Jog"}, {"args", 3}}),
                    ErrorCode::ValidationError);
  EXPECT_ERROR_CODE(CommandEnvelope::from_json(json::array()), ErrorCode::ValidationError);
}

TEST(Telemetry, KindParsing) {
  EXPECT_EQ(parse_kinds("").size(), kAllKinds.size());
  EXPECT_EQ(parse_kinds("Power,State"), (std::set<TelemetryKind>{TelemetryKind::Power, TelemetryKind::State}));
  EXPECT_ERROR_CODE(parse_kinds("Power,Frames"), ErrorCode::ValidationError);
  const json j = to_json(TelemetryBus::Delivered{4, {TelemetryKind::Alarm, {{"power", 1.0}}}});
  EXPECT_EQ(j["kind"], "Alarm");
  EXPECT_EQ(j["sequence"], 4);
}

}  // namespace
}  // namespace atomics::service
