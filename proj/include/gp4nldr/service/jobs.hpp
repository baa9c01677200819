#pragma once

#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "gp4nldr/data.hpp"
#include "gp4nldr/gp/engine.hpp"

namespace gp4nldr::service {

enum class JobState { queued, running, done, failed };

[[nodiscard]] const char* to_string(JobState state) noexcept;

struct JobStatus {
    JobState state = JobState::queued;
    /// Generations completed so far; never decreases.
    std::size_t generation = 0;
    std::size_t generations = 0;
    /// Best fitness per completed generation.
    std::vector<double> fitness_history;
    std::string error;
    /// Present iff state is done.
    std::shared_ptr<const gp::RunResult> result;
    std::int64_t created_ms = 0;
    std::int64_t updated_ms = 0;
};

/// Background executor for evolutionary runs. At most `max_concurrent` runs execute at once; the
/// rest wait in submission order. Destruction abandons queued runs and stops running ones at
/// their next generation.
class JobRunner {
public:
    explicit JobRunner(std::size_t max_concurrent = 2, std::size_t threads_per_job = 1);
    ~JobRunner();

    JobRunner(const JobRunner&) = delete;
    JobRunner& operator=(const JobRunner&) = delete;

    /// Returns the job id. The configuration must already be valid.
    std::string submit(std::shared_ptr<const data::Dataset> dataset, gp::RunConfig config);

    [[nodiscard]] std::optional<JobStatus> status(const std::string& id) const;
    /// Blocks until the job has finished (done or failed).
    JobStatus wait(const std::string& id) const;

private:
    struct Job {
        std::string id;
        std::shared_ptr<const data::Dataset> dataset;
        gp::RunConfig config;
        JobStatus status;
    };

    void work();

    std::size_t threads_per_job_;
    mutable std::mutex mutex_;
    mutable std::condition_variable changed_;
    std::map<std::string, std::shared_ptr<Job>> jobs_;
    std::deque<std::shared_ptr<Job>> queue_;
    std::size_t next_id_ = 1;
    bool stopping_ = false;
    std::vector<std::jthread> workers_;
};

} // namespace gp4nldr::service
