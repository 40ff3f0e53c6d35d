#pragma once

#include <cstdint>
#include <vector>

#include "dagor/priority.hpp"

namespace dagor {

// Per-window request counters over the compound priority grid.
class RequestHistogram {
 public:
  explicit RequestHistogram(PriorityDomain domain = {});

  void reset();
  void add(AdmissionLevel cell, bool admitted, std::uint64_t count = 1);

  std::uint64_t at(AdmissionLevel cell) const { return counts_[domain_.index_of(cell)]; }
  std::uint64_t at_index(int index) const { return counts_[index]; }
  std::uint64_t total() const { return n_; }
  std::uint64_t admitted() const { return n_adm_; }
  const PriorityDomain& domain() const { return domain_; }

 private:
  PriorityDomain domain_;
  std::vector<std::uint64_t> counts_;  // row-major [b][u]
  std::uint64_t n_ = 0;
  std::uint64_t n_adm_ = 0;
};

struct AdmissionParams {
  double alpha = 0.05;  // fraction of admitted load cut per overloaded window
  double beta = 0.01;   // fraction of incoming load added per relaxed window
  void validate() const;
};

// Histogram-driven adjustment of the compound admission level. Each window
// moves the cursor once: down until the admitted prefix falls to
// (1 - alpha) * n_adm when overloaded, otherwise up until it reaches
// n_adm + beta * n.
class AdmissionController {
 public:
  explicit AdmissionController(PriorityDomain domain = {}, AdmissionParams params = {});

  AdmissionLevel level() const { return level_; }
  void set_level(AdmissionLevel level);

  bool admits(const RequestEnvelope& req) const { return dagor::admits(level_, req); }

  void reset_histogram() { histogram_.reset(); }

  // Counts an arriving request; n_adm grows iff the current level admits it.
  void update_histogram(const RequestEnvelope& req);
  void update_histogram(AdmissionLevel cell, std::uint64_t count = 1);

  AdmissionLevel update_admit_level(bool overloaded);

  const RequestHistogram& histogram() const { return histogram_; }
  const PriorityDomain& domain() const { return domain_; }
  const AdmissionParams& params() const { return params_; }

 private:
  PriorityDomain domain_;
  AdmissionParams params_;
  AdmissionLevel level_;
  RequestHistogram histogram_;
};

}  // namespace dagor
