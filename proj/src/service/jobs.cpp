#include "gp4nldr/service/jobs.hpp"

#include <fmt/format.h>

#include "gp4nldr/explain/session.hpp"
#include "gp4nldr/service/pipeline.hpp"

namespace gp4nldr::service {

const char* to_string(JobState state) noexcept {
    switch (state) {
    case JobState::queued: return "queued";
    case JobState::running: return "running";
    case JobState::done: return "done";
    case JobState::failed: return "failed";
    }
    return "unknown";
}

JobRunner::JobRunner(std::size_t max_concurrent, std::size_t threads_per_job) : threads_per_job_(threads_per_job) {
    for (std::size_t i = 0; i < std::max<std::size_t>(1, max_concurrent); ++i) workers_.emplace_back([this] { work(); });
}

JobRunner::~JobRunner() {
    {
        std::lock_guard lock(mutex_);
        stopping_ = true;
    }
    changed_.notify_all();
    workers_.clear();
}

std::string JobRunner::submit(std::shared_ptr<const data::Dataset> dataset, gp::RunConfig config) {
    auto job = std::make_shared<Job>();
    job->dataset = std::move(dataset);
    job->status.generations = config.generations;
    job->status.created_ms = job->status.updated_ms = explain::now_ms();
    job->config = std::move(config);
    {
        std::lock_guard lock(mutex_);
        job->id = fmt::format("run-{}", next_id_++);
        jobs_.emplace(job->id, job);
        queue_.push_back(job);
    }
    changed_.notify_all();
    return job->id;
}

std::optional<JobStatus> JobRunner::status(const std::string& id) const {
    std::lock_guard lock(mutex_);
    const auto it = jobs_.find(id);
    if (it == jobs_.end()) return std::nullopt;
    return it->second->status;
}

JobStatus JobRunner::wait(const std::string& id) const {
    std::unique_lock lock(mutex_);
    const auto it = jobs_.find(id);
    if (it == jobs_.end()) throw std::out_of_range(fmt::format("unknown job '{}'", id));
    const auto job = it->second;
    changed_.wait(lock, [&] { return job->status.state == JobState::done || job->status.state == JobState::failed; });
    return job->status;
}

void JobRunner::work() {
    for (;;) {
        std::shared_ptr<Job> job;
        {
            std::unique_lock lock(mutex_);
            changed_.wait(lock, [&] { return stopping_ || !queue_.empty(); });
            if (stopping_) return;
            job = queue_.front();
            queue_.pop_front();
            job->status.state = JobState::running;
            job->status.updated_ms = explain::now_ms();
        }
        PipelineOptions options;
        options.threads = threads_per_job_;
        options.on_generation = [&](std::size_t generation, const std::vector<double>& history) {
            std::lock_guard lock(mutex_);
            if (stopping_) throw std::runtime_error("runner shut down");
            if (generation > job->status.generation) {
                job->status.generation = generation;
                job->status.fitness_history = history;
                job->status.updated_ms = explain::now_ms();
            }
        };
        try {
            auto result = std::make_shared<const gp::RunResult>(execute_run(*job->dataset, job->config, options));
            std::lock_guard lock(mutex_);
            job->status.fitness_history = result->fitness_history;
            job->status.generation = job->status.generations;
            job->status.result = std::move(result);
            job->status.state = JobState::done;
            job->status.updated_ms = explain::now_ms();
        } catch (const std::exception& e) {
            std::lock_guard lock(mutex_);
            job->status.error = e.what();
            job->status.state = JobState::failed;
            job->status.updated_ms = explain::now_ms();
        }
        changed_.notify_all();
    }
}

} // namespace gp4nldr::service
