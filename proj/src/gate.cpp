#include "dagor/gate.hpp"

namespace dagor {

Gate::Gate(PriorityDomain domain, WindowConfig window, AdmissionParams params,
           GateOptions options, Timestamp start)
    : domain_(domain),
      monitor_(window, start),
      controller_(domain, params),
      options_(options) {}

ArrivalDecision Gate::on_request_arrival(const RequestEnvelope& req, Timestamp /*now*/) {
  for (const ShedTally& tally : req.shed_report) {
    controller_.update_histogram(tally.cell, tally.count);
  }
  controller_.update_histogram(req);
  return controller_.admits(req) ? ArrivalDecision::kEnqueue : ArrivalDecision::kRejectBusy;
}

std::optional<AdmissionLevel> Gate::on_processing_start(const RequestEnvelope& req,
                                                         Timestamp now) {
  if (monitor_.config().mode != DetectionMode::kQueuingTime) return std::nullopt;
  return apply(monitor_.record_sample(now - req.arrival_time, now));
}

std::optional<AdmissionLevel> Gate::on_response_sent(const RequestEnvelope& req, Timestamp now) {
  if (monitor_.config().mode != DetectionMode::kResponseTime) return std::nullopt;
  return apply(monitor_.record_sample(now - req.arrival_time, now));
}

std::optional<AdmissionLevel> Gate::poll(Timestamp now) { return apply(monitor_.poll_window(now)); }

std::optional<AdmissionLevel> Gate::apply(std::optional<WindowReport> report) {
  if (!report) return std::nullopt;
  ++windows_closed_;
  last_report_ = report;
  const AdmissionLevel level = controller_.update_admit_level(report->overloaded);
  controller_.reset_histogram();
  return level;
}

SendDecision Gate::before_send_downstream(int target, RequestEnvelope& req) {
  req.shed_report.clear();
  if (options_.collaborative) {
    if (auto it = downstream_levels_.find(target);
        it != downstream_levels_.end() && !admits(it->second, req)) {
      if (options_.report_local_sheds) ++pending_sheds_[target][domain_.index_of(req.level())];
      return SendDecision::kShedLocal;
    }
  }
  if (auto it = pending_sheds_.find(target); it != pending_sheds_.end()) {
    for (const auto& [index, count] : it->second) {
      req.shed_report.push_back({domain_.level_at(index), count});
    }
    pending_sheds_.erase(it);
  }
  return SendDecision::kSend;
}

void Gate::on_response_receive(int target, const ResponseEnvelope& resp) {
  if (resp.piggyback) downstream_levels_.insert_or_assign(target, *resp.piggyback);
}

std::optional<AdmissionLevel> Gate::stored_level(int target) const {
  if (auto it = downstream_levels_.find(target); it != downstream_levels_.end()) return it->second;
  return std::nullopt;
}

}  // namespace dagor
