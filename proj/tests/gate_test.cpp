#include <gtest/gtest.h>

#include "dagor/gate.hpp"

using namespace dagor;
using namespace std::chrono_literals;

namespace {

AdmissionLevel L(int b, int u) {
  return {{static_cast<std::uint16_t>(b)}, {static_cast<std::uint8_t>(u)}};
}

RequestEnvelope req(int b, int u, Timestamp arrival = kTimeZero) {
  RequestEnvelope r;
  r.b = BusinessPriority{static_cast<std::uint16_t>(b)};
  r.u = UserPriority{static_cast<std::uint8_t>(u)};
  r.arrival_time = arrival;
  return r;
}

Gate make_gate(WindowConfig w = {}, GateOptions o = {}) {
  return Gate(PriorityDomain{31}, w, AdmissionParams{}, o);
}

Timestamp at_ms(double ms) { return kTimeZero + from_ms(ms); }

}  // namespace

TEST(GateArrival, OpenCursorEnqueuesEverything) {
  Gate g = make_gate();
  EXPECT_EQ(g.on_request_arrival(req(31, 127), kTimeZero), ArrivalDecision::kEnqueue);
  EXPECT_EQ(g.controller().histogram().total(), 1u);
}

TEST(GateArrival, ShedsAboveCursor) {
  Gate g = make_gate();
  g.controller().set_level(L(2, 3));
  EXPECT_EQ(g.on_request_arrival(req(5, 0), kTimeZero), ArrivalDecision::kRejectBusy);
  EXPECT_EQ(g.level(), L(2, 3));
  EXPECT_EQ(g.on_request_arrival(req(2, 3), kTimeZero), ArrivalDecision::kEnqueue);
}

TEST(GateArrival, ShedReportFoldsIntoHistogram) {
  Gate g = make_gate();
  g.controller().set_level(L(2, 3));
  RequestEnvelope r = req(1, 0);
  r.shed_report.push_back({L(4, 4), 7});
  g.on_request_arrival(r, kTimeZero);
  EXPECT_EQ(g.controller().histogram().total(), 8u);
  EXPECT_EQ(g.controller().histogram().admitted(), 1u);
  EXPECT_EQ(g.controller().histogram().at(L(4, 4)), 7u);
}

TEST(GateWindow, ZeroWaitDoesNotCloseMidWindow) {
  Gate g = make_gate();
  RequestEnvelope r = req(0, 0, at_ms(5));
  g.on_request_arrival(r, at_ms(5));
  EXPECT_FALSE(g.on_processing_start(r, at_ms(5)));
  EXPECT_EQ(g.monitor().sample_count(), 1u);
}

TEST(GateWindow, FullSlowWindowTightensLevel) {
  Gate g = make_gate();
  std::optional<AdmissionLevel> closed;
  for (int i = 0; i < 2000; ++i) {
    RequestEnvelope r = req(0, i % 128, at_ms(i * 0.2));
    g.on_request_arrival(r, r.arrival_time);
    closed = g.on_processing_start(r, r.arrival_time + 25ms);
    if (i < 1999) ASSERT_FALSE(closed);
  }
  ASSERT_TRUE(closed);
  EXPECT_LT(*closed, PriorityDomain{31}.highest());
  // 5% of 2000 admitted requests spread evenly over u in [0, 127].
  EXPECT_EQ(*closed, L(0, 120));
  EXPECT_EQ(g.windows_closed(), 1u);
  EXPECT_EQ(g.controller().histogram().total(), 0u);
}

TEST(GateWindow, CalmWindowRelaxes) {
  Gate g = make_gate();
  g.controller().set_level(L(0, 50));
  for (int i = 0; i < 128; ++i) {
    RequestEnvelope r = req(0, i, at_ms(i));
    if (g.on_request_arrival(r, r.arrival_time) == ArrivalDecision::kEnqueue) {
      g.on_processing_start(r, r.arrival_time + 5ms);
    }
  }
  auto closed = g.poll(at_ms(1000));
  ASSERT_TRUE(closed);
  // n = 128, n_adm = 51: needs 51 + 1.28, so two more cells.
  EXPECT_EQ(*closed, L(0, 52));
}

TEST(GateWindow, ResponseModeSamplesOnSend) {
  WindowConfig w;
  w.mode = DetectionMode::kResponseTime;
  Gate g = make_gate(w);
  RequestEnvelope r = req(0, 0, at_ms(1));
  g.on_request_arrival(r, r.arrival_time);
  EXPECT_FALSE(g.on_processing_start(r, at_ms(2)));
  EXPECT_EQ(g.monitor().sample_count(), 0u);
  g.on_response_sent(r, at_ms(300));
  EXPECT_EQ(g.monitor().sample_count(), 1u);
  g.poll(at_ms(1000));
  ASSERT_TRUE(g.last_report());
  EXPECT_TRUE(g.last_report()->overloaded);
}

TEST(GateCollaborative, NoStoredLevelSends) {
  Gate g = make_gate();
  RequestEnvelope r = req(31, 127);
  EXPECT_EQ(g.before_send_downstream(4, r), SendDecision::kSend);
}

TEST(GateCollaborative, StoredLevelGuardsOutbound) {
  Gate g = make_gate();
  ResponseEnvelope resp;
  resp.piggyback = L(2, 3);
  g.on_response_receive(4, resp);
  RequestEnvelope low = req(2, 9);
  EXPECT_EQ(g.before_send_downstream(4, low), SendDecision::kShedLocal);
  RequestEnvelope high = req(1, 50);
  EXPECT_EQ(g.before_send_downstream(4, high), SendDecision::kSend);
  // Another replica has no stored level yet.
  RequestEnvelope other = req(2, 9);
  EXPECT_EQ(g.before_send_downstream(5, other), SendDecision::kSend);
}

TEST(GateCollaborative, LastResponseWins) {
  Gate g = make_gate();
  ResponseEnvelope resp;
  resp.piggyback = L(2, 3);
  g.on_response_receive(1, resp);
  EXPECT_EQ(g.stored_level(1), L(2, 3));
  resp.piggyback = L(2, 5);
  g.on_response_receive(1, resp);
  EXPECT_EQ(g.stored_level(1), L(2, 5));
  resp.outcome = Outcome::kRejectedBusy;
  resp.piggyback = L(1, 0);
  g.on_response_receive(1, resp);
  EXPECT_EQ(g.stored_level(1), L(1, 0));
  RequestEnvelope r = req(2, 0);
  EXPECT_EQ(g.before_send_downstream(1, r), SendDecision::kShedLocal);
  // Responses without a level leave the table alone.
  resp.piggyback.reset();
  g.on_response_receive(1, resp);
  EXPECT_EQ(g.stored_level(1), L(1, 0));
}

TEST(GateCollaborative, LocalShedsTravelWithNextSend) {
  Gate g = make_gate();
  ResponseEnvelope resp;
  resp.piggyback = L(1, 0);
  g.on_response_receive(2, resp);
  for (int i = 0; i < 3; ++i) {
    RequestEnvelope shed = req(3, 7);
    ASSERT_EQ(g.before_send_downstream(2, shed), SendDecision::kShedLocal);
  }
  RequestEnvelope sent = req(0, 0);
  ASSERT_EQ(g.before_send_downstream(2, sent), SendDecision::kSend);
  ASSERT_EQ(sent.shed_report.size(), 1u);
  EXPECT_EQ(sent.shed_report[0].cell, L(3, 7));
  EXPECT_EQ(sent.shed_report[0].count, 3u);
  RequestEnvelope again = req(0, 0);
  g.before_send_downstream(2, again);
  EXPECT_TRUE(again.shed_report.empty());
}

TEST(GateCollaborative, DisabledNeverShedsLocally) {
  GateOptions o;
  o.collaborative = false;
  Gate g = make_gate({}, o);
  ResponseEnvelope resp;
  resp.piggyback = L(0, 0);
  g.on_response_receive(2, resp);
  RequestEnvelope r = req(9, 9);
  EXPECT_EQ(g.before_send_downstream(2, r), SendDecision::kSend);
}
