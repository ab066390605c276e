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

#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

namespace atomics {

/// Bounded, lossy-for-slow-readers fan-out. Publishing never blocks on a
/// reader: a subscriber whose queue is full is marked overflowed and closed.
template <typename Event>
class Broadcast {
 public:
  struct Delivered {
    std::uint64_t sequence;  // per-subscriber, gap-free from subscription
    Event event;
  };

  class Subscription {
   public:
    explicit Subscription(std::size_t capacity, std::function<bool(const Event&)> filter)
        : capacity_(capacity), filter_(std::move(filter)) {}

    /// Waits up to `timeout` for the next event. Returns nullopt on timeout
    /// or once the subscription is closed and drained.
    std::optional<Delivered> pop(std::chrono::milliseconds timeout) {
      std::unique_lock lock(mutex_);
      cv_.wait_for(lock, timeout, [&] { return !queue_.empty() || closed_; });
      if (queue_.empty()) return std::nullopt;
      Delivered d = std::move(queue_.front());
      queue_.pop_front();
      return d;
    }

    std::optional<Delivered> try_pop() { return pop(std::chrono::milliseconds(0)); }

    bool overflowed() const {
      std::lock_guard lock(mutex_);
      return overflowed_;
    }
    bool closed() const {
      std::lock_guard lock(mutex_);
      return closed_;
    }
    std::size_t pending() const {
      std::lock_guard lock(mutex_);
      return queue_.size();
    }
    void close() {
      {
        std::lock_guard lock(mutex_);
        closed_ = true;
      }
      cv_.notify_all();
    }

   private:
    friend class Broadcast;

    // Returns false once the subscriber should be dropped.
    bool offer(const Event& e) {
      if (filter_ && !filter_(e)) return true;
      bool keep = true;
      {
        std::lock_guard lock(mutex_);
        if (closed_) return false;
        if (queue_.size() >= capacity_) {
          overflowed_ = true;
          closed_ = true;
          queue_.clear();
          keep = false;
        } else {
          queue_.push_back({next_sequence_++, e});
        }
      }
      cv_.notify_all();
      return keep;
    }

    std::size_t capacity_;
    std::function<bool(const Event&)> filter_;
    mutable std::mutex mutex_;
    std::condition_variable cv_;
    std::deque<Delivered> queue_;
    std::uint64_t next_sequence_ = 0;
    bool overflowed_ = false;
    bool closed_ = false;
  };

  std::shared_ptr<Subscription> subscribe(std::size_t capacity = 256,
                                          std::function<bool(const Event&)> filter = {}) {
    auto sub = std::make_shared<Subscription>(capacity, std::move(filter));
    std::lock_guard lock(mutex_);
    subscribers_.push_back(sub);
    return sub;
  }

  void publish(const Event& e) {
    std::lock_guard lock(mutex_);
    std::erase_if(subscribers_, [&](const std::shared_ptr<Subscription>& s) {
      return s.use_count() == 1 || !s->offer(e);
    });
  }

  std::size_t subscriber_count() const {
    std::lock_guard lock(mutex_);
    return subscribers_.size();
  }

 private:
  mutable std::mutex mutex_;
  std::vector<std::shared_ptr<Subscription>> subscribers_;
};

}  // namespace atomics
