#pragma once

#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "attriq/linalg.hpp"
#include "attriq/model.hpp"

namespace attriq {

// Per-token gradients as reported by an external model process.
struct TokenGradients {
    std::vector<std::string> tokens;
    Matrix gradient;  // n_tokens x d
};

// Bridges a model running in a child process, speaking line-delimited JSON
// over stdin/stdout:
//   request  {"op":"predict"|"gradient", "question":..., "context":...}
//   response {"proba":...} or {"tokens":[...], "gradient":[[...]]}
// This is how large pretrained checkpoints attach without entering the core.
// Calls are serialized on the single connection; not thread safe.
class ExternalProcessModel : public AnswerabilityModel {
public:
    explicit ExternalProcessModel(const std::string& command);
    ~ExternalProcessModel() override;

    ExternalProcessModel(const ExternalProcessModel&) = delete;
    ExternalProcessModel& operator=(const ExternalProcessModel&) = delete;

    double predict_proba(const std::string& question, const std::string& context) const override;

    // Raw input gradients via the protocol's "gradient" op.
    TokenGradients token_gradients(const std::string& question, const std::string& context) const;

    const std::string& command() const { return command_; }

private:
    std::string request(const std::string& payload) const;

    std::string command_;
    mutable std::mutex mutex_;
    struct Process;
    std::unique_ptr<Process> process_;
};

}  // namespace attriq
