#pragma once

#include <mutex>

namespace twomode::detail {

/// FFTW planning is not thread-safe; every plan/destroy call holds this.
inline std::mutex& fftw_planner_mutex()
{
    static std::mutex m;
    return m;
}

} // namespace twomode::detail
