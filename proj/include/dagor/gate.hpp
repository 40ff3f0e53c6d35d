#pragma once

#include <map>
#include <optional>
#include <unordered_map>
#include <vector>

#include "dagor/admission.hpp"
#include "dagor/load_monitor.hpp"
#include "dagor/priority.hpp"

namespace dagor {

enum class ArrivalDecision { kEnqueue, kRejectBusy };
enum class SendDecision { kSend, kShedLocal };

struct GateOptions {
  // Shed outbound requests against the downstream's last piggybacked level.
  bool collaborative = true;
  // Forward counts of locally shed requests to the downstream on the next
  // request sent to it, so its histogram still sees the shed demand.
  bool report_local_sheds = true;
};

// Per-server overload control: load detection, adaptive admission of inbound
// requests, and collaborative shedding of outbound requests.
class Gate {
 public:
  Gate(PriorityDomain domain, WindowConfig window, AdmissionParams params,
       GateOptions options = {}, Timestamp start = kTimeZero);

  // Inbound side.
  ArrivalDecision on_request_arrival(const RequestEnvelope& req, Timestamp now);
  // Records the queuing sample. Returns the level if a window closed.
  std::optional<AdmissionLevel> on_processing_start(const RequestEnvelope& req, Timestamp now);
  // Records the response-time sample (response-time mode only).
  std::optional<AdmissionLevel> on_response_sent(const RequestEnvelope& req, Timestamp now);
  // Closes an elapsed time window even when no samples arrive.
  std::optional<AdmissionLevel> poll(Timestamp now);
  // Time at which the open window's interval elapses.
  Timestamp window_deadline() const {
    return monitor_.window_start() + monitor_.config().interval;
  }

  // Outbound side. `target` identifies a downstream server (replica). On
  // kSend any pending shed tally for the target is attached to `req`.
  SendDecision before_send_downstream(int target, RequestEnvelope& req);
  void on_response_receive(int target, const ResponseEnvelope& resp);

  AdmissionLevel level() const { return controller_.level(); }
  std::optional<AdmissionLevel> stored_level(int target) const;

  const AdmissionController& controller() const { return controller_; }
  AdmissionController& controller() { return controller_; }
  const LoadMonitor& monitor() const { return monitor_; }
  const GateOptions& options() const { return options_; }
  std::uint64_t windows_closed() const { return windows_closed_; }
  const std::optional<WindowReport>& last_report() const { return last_report_; }

 private:
  std::optional<AdmissionLevel> apply(std::optional<WindowReport> report);

  PriorityDomain domain_;
  LoadMonitor monitor_;
  AdmissionController controller_;
  GateOptions options_;
  std::unordered_map<int, AdmissionLevel> downstream_levels_;
  std::unordered_map<int, std::map<int, std::uint32_t>> pending_sheds_;
  std::uint64_t windows_closed_ = 0;
  std::optional<WindowReport> last_report_;
};

}  // namespace dagor
