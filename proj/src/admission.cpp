#include "dagor/admission.hpp"

#include <algorithm>
#include <stdexcept>

namespace dagor {

RequestHistogram::RequestHistogram(PriorityDomain domain)
    : domain_(domain), counts_(static_cast<std::size_t>(domain.level_count()), 0) {}

void RequestHistogram::reset() {
  std::fill(counts_.begin(), counts_.end(), 0);
  n_ = 0;
  n_adm_ = 0;
}

void RequestHistogram::add(AdmissionLevel cell, bool admitted, std::uint64_t count) {
  counts_[domain_.index_of(cell)] += count;
  n_ += count;
  if (admitted) n_adm_ += count;
}

void AdmissionParams::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("admission.alpha must be in (0,1)");
  if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("admission.beta must be in (0,1)");
}

AdmissionController::AdmissionController(PriorityDomain domain, AdmissionParams params)
    : domain_(domain), params_(params), level_(domain.highest()), histogram_(domain) {
  params_.validate();
}

void AdmissionController::set_level(AdmissionLevel level) {
  if (!domain_.contains(level)) throw std::out_of_range("admission level outside domain");
  level_ = level;
}

void AdmissionController::update_histogram(const RequestEnvelope& req) {
  update_histogram(req.level());
}

void AdmissionController::update_histogram(AdmissionLevel cell, std::uint64_t count) {
  if (!domain_.contains(cell)) throw std::out_of_range("request priority outside domain");
  histogram_.add(cell, dagor::admits(level_, cell.b, cell.u), count);
}

AdmissionLevel AdmissionController::update_admit_level(bool overloaded) {
  const auto n = static_cast<double>(histogram_.total());
  const auto n_adm = static_cast<double>(histogram_.admitted());
  const AdmissionLevel lo = domain_.lowest();
  const AdmissionLevel hi = domain_.highest();
  const auto u_max = kUserPriorityMax;
  double prefix = n_adm;

  if (overloaded) {
    const double expected = (1.0 - params_.alpha) * n_adm;
    while (prefix > expected && level_ > lo) {
      // Moving the cursor down one notch stops admitting the cell it leaves.
      prefix -= static_cast<double>(histogram_.at(level_));
      if (level_.u.value == 0) {
        --level_.b.value;
        level_.u.value = u_max;
      } else {
        --level_.u.value;
      }
    }
  } else {
    const double expected = n_adm + params_.beta * n;
    while (prefix < expected && level_ < hi) {
      if (level_.u.value == u_max) {
        ++level_.b.value;
        level_.u.value = 0;
      } else {
        ++level_.u.value;
      }
      prefix += static_cast<double>(histogram_.at(level_));
    }
  }
  return level_;
}

}  // namespace dagor
