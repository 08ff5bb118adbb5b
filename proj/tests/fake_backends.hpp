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

#pragma once

// Scripted classifier backends for tests.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <functional>
#include <mutex>
#include <thread>

#include "uttsel/llmgate.hpp"

namespace uttsel::test {

// Replies through a callback and counts calls.
class FunctionBackend : public llm::Backend {
 public:
  explicit FunctionBackend(std::function<std::string(const llm::ClassifierRequest&)> fn) : fn_(std::move(fn)) {}
  std::string complete(const llm::ClassifierRequest& request) override {
    ++calls;
    return fn_(request);
  }
  std::atomic<int> calls{0};

 private:
  std::function<std::string(const llm::ClassifierRequest&)> fn_;
};

// Fails with a transient error `failures` times per request before replying.
class FlakyBackend : public llm::Backend {
 public:
  FlakyBackend(int failures, std::string reply) : failures_(failures), reply_(std::move(reply)) {}
  std::string complete(const llm::ClassifierRequest& request) override {
    std::lock_guard lock(mu_);
    ++calls;
    if (seen_[request.request_hash]++ < failures_) throw llm::TransientError("simulated outage");
    return reply_;
  }
  int calls = 0;

 private:
  int failures_;
  std::string reply_;
  std::mutex mu_;
  std::map<std::string, int> seen_;
};

// Sleeps a request-dependent time and records the peak number of concurrent calls.
class SlowBackend : public llm::Backend {
 public:
  std::string complete(const llm::ClassifierRequest& request) override {
    const int now = ++active_;
    int peak = peak_.load();
    while (now > peak && !peak_.compare_exchange_weak(peak, now)) {
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(1 + request.request_hash[0] % 7));
    --active_;
    return llm::heuristic_classify(request.sentence).raw_response;
  }
  int peak() const { return peak_.load(); }

 private:
  std::atomic<int> active_{0};
  std::atomic<int> peak_{0};
};

}  // namespace uttsel::test
