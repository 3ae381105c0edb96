#pragma once

namespace swarm::ltl {

namespace detail {

template <typename Visit>
void enumerate_words(const std::vector<Label>& alphabet, std::size_t len, std::vector<Label>& acc,
                     Visit&& visit) {
    if (acc.size() == len) {
        visit(acc);
        return;
    }
    for (const auto& l : alphabet) {
        acc.push_back(l);
        enumerate_words(alphabet, len, acc, visit);
        acc.pop_back();
    }
}

}  // namespace detail

template <typename Visit>
void for_each_lasso(const std::vector<Label>& alphabet, std::size_t max_prefix, std::size_t max_loop,
                    Visit&& visit) {
    std::vector<Label> prefix;
    std::vector<Label> loop;
    for (std::size_t p = 0; p <= max_prefix; ++p) {
        detail::enumerate_words(alphabet, p, prefix, [&](const std::vector<Label>& pre) {
            for (std::size_t l = 1; l <= max_loop; ++l) {
                detail::enumerate_words(alphabet, l, loop, [&](const std::vector<Label>& lp) {
                    LassoWord w;
                    w.prefix = pre;
                    w.loop = lp;
                    visit(static_cast<const LassoWord&>(w));
                });
            }
        });
    }
}

}  // namespace swarm::ltl
