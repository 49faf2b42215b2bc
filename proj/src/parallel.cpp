#include "thinlayer/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace thinlayer {

int worker_count() {
    int n = static_cast<int>(std::thread::hardware_concurrency());
    if (n < 1) n = 1;
    if (const char* env = std::getenv("THINLAYER_THREADS")) {
        try {
            const int cap = std::stoi(env);
            if (cap >= 1) n = std::min(n, cap);
        } catch (...) {
        }
    }
    return n;
}

int parallel_chunks(int n, const std::function<void(int, int, int)>& body) {
    const int workers = worker_count();
    const int chunks = std::max(1, std::min(workers, n / 2048));
    if (chunks == 1) {
        body(0, 0, n);
        return 1;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(chunks);
    for (int c = 0; c < chunks; ++c) {
        const int b = static_cast<int>(static_cast<long long>(n) * c / chunks);
        const int e = static_cast<int>(static_cast<long long>(n) * (c + 1) / chunks);
        pool.emplace_back([&body, &errors, c, b, e] {
            try {
                body(c, b, e);
            } catch (...) {
                errors[c] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& err : errors)
        if (err) std::rethrow_exception(err);
    return chunks;
}

}  // namespace thinlayer
