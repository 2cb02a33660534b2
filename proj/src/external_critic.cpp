#include "octarl/external_critic.hpp"

#include <fcntl.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <mutex>

#include <nlohmann/json.hpp>

namespace octarl {

namespace {

using nlohmann::json;

class ExternalCritic : public Critic {
public:
    ExternalCritic(std::vector<std::string> argv, std::string work_dir)
        : argv_(std::move(argv)), work_dir_(std::move(work_dir)) {
        require(!argv_.empty(), "external critic needs a command");
    }

    ~ExternalCritic() override {
        if (stdin_fd_ >= 0) close(stdin_fd_);
        if (stdout_fd_ >= 0) close(stdout_fd_);
        if (pid_ > 0) {
            int status = 0;
            waitpid(pid_, &status, 0);
        }
    }

    std::string name() const override { return "external:" + argv_[0]; }

    double score(const Artifact& artifact) const override {
        std::lock_guard<std::mutex> lock(mutex_);
        ensure_started();

        json request;
        if (artifact.grid) {
            const std::string path = work_dir_ + "/artifact.crvx";
            save_grid(path, *artifact.grid);
            request["grid"] = path;
        }
        if (artifact.mesh) {
            const std::string path = work_dir_ + "/artifact.obj";
            save_obj(path, *artifact.mesh);
            request["mesh"] = path;
        }
        request["prompt_id"] = artifact.prompt_id;

        write_line(request.dump());
        const std::string reply = read_line();
        json parsed;
        try {
            parsed = json::parse(reply);
        } catch (const json::exception& e) {
            fail("external critic sent malformed JSON: " + std::string(e.what()));
        }
        require(parsed.contains("score") && parsed["score"].is_number(),
                "external critic reply missing numeric 'score'");
        return parsed["score"].get<double>();
    }

private:
    void ensure_started() const {
        if (pid_ > 0) return;
        int to_child[2], from_child[2];
        require(pipe(to_child) == 0 && pipe(from_child) == 0, "pipe() failed");
        signal(SIGPIPE, SIG_IGN);  // broken child surfaces as a write error instead
        const pid_t pid = fork();
        require(pid >= 0, "fork() failed");
        if (pid == 0) {
            dup2(to_child[0], STDIN_FILENO);
            dup2(from_child[1], STDOUT_FILENO);
            close(to_child[0]);
            close(to_child[1]);
            close(from_child[0]);
            close(from_child[1]);
            std::vector<char*> argv;
            argv.reserve(argv_.size() + 1);
            for (const auto& a : argv_) argv.push_back(const_cast<char*>(a.c_str()));
            argv.push_back(nullptr);
            execvp(argv[0], argv.data());
            _exit(127);
        }
        close(to_child[0]);
        close(from_child[1]);
        pid_ = pid;
        stdin_fd_ = to_child[1];
        stdout_fd_ = from_child[0];
    }

    void write_line(const std::string& line) const {
        std::string payload = line;
        payload.push_back('\n');
        size_t off = 0;
        while (off < payload.size()) {
            const ssize_t n = write(stdin_fd_, payload.data() + off, payload.size() - off);
            if (n < 0) {
                if (errno == EINTR) continue;
                fail("external critic write failed: " + std::string(strerror(errno)));
            }
            off += static_cast<size_t>(n);
        }
    }

    std::string read_line() const {
        std::string line;
        char ch;
        for (;;) {
            const ssize_t n = read(stdout_fd_, &ch, 1);
            if (n < 0) {
                if (errno == EINTR) continue;
                fail("external critic read failed: " + std::string(strerror(errno)));
            }
            if (n == 0) fail("external critic closed its output (command: " + argv_[0] + ")");
            if (ch == '\n') return line;
            line.push_back(ch);
        }
    }

    std::vector<std::string> argv_;
    std::string work_dir_;
    mutable std::mutex mutex_;
    mutable pid_t pid_ = -1;
    mutable int stdin_fd_ = -1;
    mutable int stdout_fd_ = -1;
};

}  // namespace

std::shared_ptr<Critic> make_external_critic(std::vector<std::string> argv, std::string work_dir) {
    return std::make_shared<ExternalCritic>(std::move(argv), std::move(work_dir));
}

}  // namespace octarl
