#include "attriq/external_model.hpp"

#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <csignal>
#include <cstdio>
#include <cstring>
#include <mutex>

#include <json.hpp>

#include "attriq/error.hpp"

namespace attriq {

using nlohmann::json;

namespace {

// A write to a pipe whose child already exited must surface as EPIPE, not
// terminate the process. Installed once, and only if nobody else claimed
// the signal.
void ignore_sigpipe_once() {
    static std::once_flag flag;
    std::call_once(flag, [] {
        struct sigaction current {};
        if (sigaction(SIGPIPE, nullptr, &current) == 0 && current.sa_handler == SIG_DFL) {
            current.sa_handler = SIG_IGN;
            sigaction(SIGPIPE, &current, nullptr);
        }
    });
}

}  // namespace

struct ExternalProcessModel::Process {
    pid_t pid = -1;
    FILE* to_child = nullptr;
    FILE* from_child = nullptr;

    ~Process() {
        if (to_child) std::fclose(to_child);
        if (from_child) std::fclose(from_child);
        if (pid > 0) {
            int status = 0;
            if (waitpid(pid, &status, WNOHANG) == 0) {
                kill(pid, SIGTERM);
                waitpid(pid, &status, 0);
            }
        }
    }
};

ExternalProcessModel::ExternalProcessModel(const std::string& command)
    : command_(command), process_(std::make_unique<Process>()) {
    if (command.empty()) raise(ErrorCode::config, "external model: empty command");
    ignore_sigpipe_once();

    int to_child[2];
    int from_child[2];
    if (pipe(to_child) != 0 || pipe(from_child) != 0)
        raise(ErrorCode::model, std::string("external model: pipe failed: ") + std::strerror(errno));

    const pid_t pid = fork();
    if (pid < 0) raise(ErrorCode::model, std::string("external model: fork failed: ") + std::strerror(errno));
    if (pid == 0) {
        dup2(to_child[0], STDIN_FILENO);
        dup2(from_child[1], STDOUT_FILENO);
        close(to_child[0]);
        close(to_child[1]);
        close(from_child[0]);
        close(from_child[1]);
        execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
        std::perror("attriq: exec failed");
        _exit(127);
    }

    close(to_child[0]);
    close(from_child[1]);
    process_->pid = pid;
    process_->to_child = fdopen(to_child[1], "w");
    process_->from_child = fdopen(from_child[0], "r");
    if (!process_->to_child || !process_->from_child)
        raise(ErrorCode::model, "external model: fdopen failed");
}

ExternalProcessModel::~ExternalProcessModel() = default;

std::string ExternalProcessModel::request(const std::string& payload) const {
    std::lock_guard<std::mutex> lock(mutex_);
    if (std::fputs(payload.c_str(), process_->to_child) == EOF || std::fputc('\n', process_->to_child) == EOF ||
        std::fflush(process_->to_child) != 0)
        raise(ErrorCode::model, "external model '" + command_ + "': write failed (process exited?)");

    std::string line;
    int c;
    while ((c = std::fgetc(process_->from_child)) != EOF && c != '\n') line.push_back(static_cast<char>(c));
    if (line.empty() && c == EOF)
        raise(ErrorCode::model, "external model '" + command_ + "': connection closed");
    return line;
}

double ExternalProcessModel::predict_proba(const std::string& question, const std::string& context) const {
    json req = {{"op", "predict"}, {"question", question}, {"context", context}};
    json resp;
    try {
        resp = json::parse(request(req.dump()));
    } catch (const json::exception& e) {
        raise(ErrorCode::model, "external model: unparsable response: " + std::string(e.what()));
    }
    if (resp.contains("error")) raise(ErrorCode::model, "external model error: " + resp["error"].dump());
    if (!resp.contains("proba")) raise(ErrorCode::model, "external model: response missing 'proba'");
    return resp["proba"].get<double>();
}

TokenGradients ExternalProcessModel::token_gradients(const std::string& question, const std::string& context) const {
    json req = {{"op", "gradient"}, {"question", question}, {"context", context}};
    json resp;
    try {
        resp = json::parse(request(req.dump()));
    } catch (const json::exception& e) {
        raise(ErrorCode::model, "external model: unparsable response: " + std::string(e.what()));
    }
    if (resp.contains("error")) raise(ErrorCode::model, "external model error: " + resp["error"].dump());
    if (!resp.contains("tokens") || !resp.contains("gradient"))
        raise(ErrorCode::model, "external model: gradient response missing 'tokens'/'gradient'");

    TokenGradients out;
    for (const auto& t : resp["tokens"]) out.tokens.push_back(t.get<std::string>());
    const auto& rows = resp["gradient"];
    const std::size_t n = rows.size();
    if (n != out.tokens.size())
        raise(ErrorCode::model, "external model: gradient rows do not match token count");
    const std::size_t d = n > 0 ? rows[0].size() : 0;
    out.gradient = Matrix(n, d);
    for (std::size_t i = 0; i < n; ++i) {
        if (rows[i].size() != d) raise(ErrorCode::model, "external model: ragged gradient matrix");
        for (std::size_t k = 0; k < d; ++k) out.gradient.at(i, k) = rows[i][k].get<double>();
    }
    return out;
}

}  // namespace attriq
