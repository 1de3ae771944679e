#pragma once

// Lock-step federation kernel: federates register step handlers, exchange
// latest-value topics through a double-buffered bus, and advance together
// with a barrier between steps.

#include <barrier>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <random>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_map>
#include <utility>
#include <vector>

#include <fmt/format.h>

#include "pet/error.hpp"
#include "pet/profile.hpp"

namespace pet::kernel {

struct FederateId {
  std::size_t id = 0;
  std::string name;

  friend bool operator==(const FederateId& a, const FederateId& b) { return a.id == b.id; }
};

struct SimClock {
  double step_s = 60.0;
  double t_market_s = 300.0;

  /// Physics steps per market round.
  std::size_t steps_per_round() const {
    return static_cast<std::size_t>(std::llround(t_market_s / step_s));
  }

  void validate() const {
    if (!(step_s > 0.0)) throw KernelError("clock step must be positive");
    const double ratio = t_market_s / step_s;
    if (ratio < 1.0 || std::abs(ratio - std::round(ratio)) > 1e-9)
      throw KernelError(fmt::format("t_market ({} s) is not an integer multiple of step ({} s)",
                                    t_market_s, step_s));
  }
};

enum class Execution { sequential, parallel };

class Federation;

/// Handle given to a federate while it runs one step (or its initialization).
class StepContext {
public:
  /// Simulation time at the start of this step, in seconds.
  double t() const { return t_; }
  std::size_t step_index() const { return step_; }
  bool initializing() const { return initializing_; }
  const SimClock& clock() const;
  /// True when this step starts a market round.
  bool market_step() const;

  /// Value committed at the last barrier, or the bus default if never published.
  double read(std::string_view key) const;
  double read(std::string_view key, double fallback) const;
  /// Visible to every federate from the next barrier onward.
  void publish(std::string_view key, double value);

  std::mt19937_64& rng();
  const FederateId& self() const;

private:
  friend class Federation;
  StepContext(Federation& fed, std::size_t owner) : fed_(&fed), owner_(owner) {}

  Federation* fed_;
  std::size_t owner_;
  double t_ = 0.0;
  std::size_t step_ = 0;
  bool initializing_ = false;
};

struct FederateCallbacks {
  std::function<void(StepContext&)> initialize;  // optional; runs once before step 0
  std::function<void(StepContext&)> step;
};

class Federation {
public:
  explicit Federation(SimClock clock, std::uint64_t seed = 0, double default_value = 0.0)
      : clock_(clock), seed_(seed), default_value_(default_value) {
    clock_.validate();
  }

  Federation(const Federation&) = delete;
  Federation& operator=(const Federation&) = delete;

  FederateId register_federate(std::string name, FederateCallbacks callbacks) {
    if (started_) throw KernelError("register_federate called after run() started");
    if (!callbacks.step) throw KernelError(fmt::format("federate '{}' has no step handler", name));
    for (const auto& f : federates_)
      if (f.id.name == name) throw KernelError(fmt::format("duplicate federate name '{}'", name));
    FederateId id{federates_.size(), std::move(name)};
    federates_.push_back(Entry{id, std::move(callbacks),
                               std::mt19937_64(derive_seed(seed_, id.id)), {}});
    return id;
  }

  std::size_t size() const { return federates_.size(); }
  const SimClock& clock() const { return clock_; }
  std::size_t steps_completed() const { return steps_completed_; }

  /// Committed value of `key` (post-run inspection and tests).
  double value(std::string_view key) const {
    auto it = committed_.find(std::string(key));
    return it == committed_.end() ? default_value_ : it->second;
  }
  bool has_value(std::string_view key) const { return committed_.contains(std::string(key)); }

  /// Advance every federate by until/step steps. Federates are invoked in
  /// FederateId order (sequential) or concurrently between barriers
  /// (parallel); both produce identical bus contents.
  void run(double until_s, Execution exec = Execution::sequential) {
    if (started_) throw KernelError("run() may only be called once per federation");
    const double ratio = until_s / clock_.step_s;
    if (until_s < 0.0 || std::abs(ratio - std::round(ratio)) > 1e-9)
      throw KernelError(fmt::format("run horizon {} s is not a multiple of the step", until_s));
    started_ = true;
    const auto n_steps = static_cast<std::size_t>(std::llround(ratio));

    for (std::size_t i = 0; i < federates_.size(); ++i) {
      if (!federates_[i].callbacks.initialize) continue;
      StepContext ctx(*this, i);
      ctx.initializing_ = true;
      invoke(federates_[i].callbacks.initialize, ctx, "initialize");
    }
    commit();

    if (exec == Execution::parallel && federates_.size() > 1)
      run_parallel(n_steps);
    else
      run_sequential(n_steps);
  }

private:
  friend class StepContext;

  struct Entry {
    FederateId id;
    FederateCallbacks callbacks;
    std::mt19937_64 rng;
    std::vector<std::pair<std::string, double>> pending;
  };

  void invoke(const std::function<void(StepContext&)>& fn, StepContext& ctx, const char* phase) {
    try {
      fn(ctx);
    } catch (const std::exception& e) {
      throw KernelError(fmt::format("federate '{}' failed during {} at t={} s: {}",
                                    federates_[ctx.owner_].id.name, phase, ctx.t_, e.what()));
    }
  }

  StepContext context_for(std::size_t i, std::size_t step) {
    StepContext ctx(*this, i);
    ctx.step_ = step;
    ctx.t_ = static_cast<double>(step) * clock_.step_s;
    return ctx;
  }

  void run_sequential(std::size_t n_steps) {
    for (std::size_t s = 0; s < n_steps; ++s) {
      for (std::size_t i = 0; i < federates_.size(); ++i) {
        auto ctx = context_for(i, s);
        invoke(federates_[i].callbacks.step, ctx, "step");
      }
      commit();
      ++steps_completed_;
    }
  }

  void run_parallel(std::size_t n_steps) {
    const std::size_t n = federates_.size();
    std::barrier sync(static_cast<std::ptrdiff_t>(n + 1));
    std::vector<std::exception_ptr> errors(n);
    std::size_t current = 0;
    bool stop = false;

    std::vector<std::jthread> workers;
    workers.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      workers.emplace_back([&, i] {
        for (;;) {
          sync.arrive_and_wait();
          if (stop) return;
          try {
            auto ctx = context_for(i, current);
            invoke(federates_[i].callbacks.step, ctx, "step");
          } catch (...) {
            errors[i] = std::current_exception();
          }
          sync.arrive_and_wait();
        }
      });
    }

    std::exception_ptr failure;
    for (std::size_t s = 0; s < n_steps && !failure; ++s) {
      current = s;
      sync.arrive_and_wait();
      sync.arrive_and_wait();
      for (auto& e : errors)
        if (e && !failure) failure = e;
      if (failure) break;
      commit();
      ++steps_completed_;
    }
    stop = true;
    sync.arrive_and_wait();
    workers.clear();
    if (failure) std::rethrow_exception(failure);
  }

  void claim(std::size_t owner, const std::string& key) {
    std::lock_guard lock(owner_mutex_);
    auto [it, inserted] = owners_.try_emplace(key, owner);
    if (!inserted && it->second != owner)
      throw KernelError(fmt::format("federate '{}' cannot publish '{}': owned by '{}'",
                                    federates_[owner].id.name, key,
                                    federates_[it->second].id.name));
  }

  void commit() {
    for (auto& f : federates_) {
      for (auto& [key, v] : f.pending) committed_.insert_or_assign(std::move(key), v);
      f.pending.clear();
    }
  }

  SimClock clock_;
  std::uint64_t seed_;
  double default_value_;
  std::vector<Entry> federates_;
  std::unordered_map<std::string, double> committed_;
  std::unordered_map<std::string, std::size_t> owners_;
  std::mutex owner_mutex_;
  bool started_ = false;
  std::size_t steps_completed_ = 0;
};

inline const SimClock& StepContext::clock() const { return fed_->clock_; }

inline bool StepContext::market_step() const {
  return !initializing_ && step_ % fed_->clock_.steps_per_round() == 0;
}

inline double StepContext::read(std::string_view key) const {
  return read(key, fed_->default_value_);
}

inline double StepContext::read(std::string_view key, double fallback) const {
  auto it = fed_->committed_.find(std::string(key));
  return it == fed_->committed_.end() ? fallback : it->second;
}

inline void StepContext::publish(std::string_view key, double value) {
  std::string k(key);
  fed_->claim(owner_, k);
  fed_->federates_[owner_].pending.emplace_back(std::move(k), value);
}

inline std::mt19937_64& StepContext::rng() { return fed_->federates_[owner_].rng; }

inline const FederateId& StepContext::self() const { return fed_->federates_[owner_].id; }

} // namespace pet::kernel
