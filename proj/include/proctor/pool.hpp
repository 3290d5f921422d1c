/**
 * Copyright 2026 The proctorlens Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <condition_variable>
#include <cstddef>
#include <deque>
#include <exception>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <thread>
#include <utility>
#include <vector>

namespace proctor {

/// Runs `work` over the items returned by `produce` on `workers` threads and
/// hands the results to `commit` in production order, one at a time.
///
/// `produce` and `commit` run on the calling thread and under the commit
/// lock respectively, so neither needs to be thread-safe. `work` receives the
/// worker index in [0, workers) for per-worker state. The first exception
/// thrown anywhere stops production and is rethrown after all workers exit.
template <class Item, class Result>
void run_ordered(int workers, const std::function<std::optional<Item>()>& produce,
                 const std::function<Result(Item&, int)>& work,
                 const std::function<void(Result&&)>& commit) {
    if (workers <= 1) {
        while (auto item = produce()) {
            commit(work(*item, 0));
        }
        return;
    }

    std::mutex mu;
    std::condition_variable can_take;
    std::condition_variable can_put;
    std::deque<std::pair<std::size_t, Item>> queue;
    std::map<std::size_t, Result> pending;
    std::size_t next_commit = 0;
    bool closed = false;
    std::exception_ptr failure;
    const std::size_t capacity = static_cast<std::size_t>(workers) * 2;

    std::mutex commit_mu;
    const auto worker = [&](int w) {
        for (;;) {
            std::pair<std::size_t, Item> job;
            {
                std::unique_lock lock(mu);
                can_take.wait(lock, [&] { return !queue.empty() || closed; });
                if (queue.empty()) {
                    return;
                }
                job = std::move(queue.front());
                queue.pop_front();
            }
            can_put.notify_one();
            try {
                Result r = work(job.second, w);
                std::lock_guard clock(commit_mu);
                pending.emplace(job.first, std::move(r));
                for (auto it = pending.begin(); it != pending.end() && it->first == next_commit;
                     it = pending.erase(it)) {
                    commit(std::move(it->second));
                    ++next_commit;
                }
            } catch (...) {
                std::lock_guard lock(mu);
                if (!failure) {
                    failure = std::current_exception();
                }
                closed = true;
                queue.clear();
                can_take.notify_all();
                can_put.notify_all();
                return;
            }
        }
    };

    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        threads.emplace_back(worker, w);
    }
    try {
        for (std::size_t seq = 0;; ++seq) {
            {
                std::unique_lock lock(mu);
                can_put.wait(lock, [&] { return queue.size() < capacity || closed; });
                if (closed) {
                    break;
                }
            }
            auto item = produce();
            if (!item) {
                break;
            }
            std::lock_guard lock(mu);
            queue.emplace_back(seq, std::move(*item));
            can_take.notify_one();
        }
    } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) {
            failure = std::current_exception();
        }
        queue.clear();
    }
    {
        std::lock_guard lock(mu);
        closed = true;
    }
    can_take.notify_all();
    for (auto& t : threads) {
        t.join();
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
}

}  // namespace proctor
