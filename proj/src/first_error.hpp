#pragma once

#include <cstddef>
#include <exception>

namespace shotlocker::detail {

// Exceptions must not cross an OpenMP region; loops catch per iteration and
// this keeps the one from the lowest iteration index.
class FirstError {
 public:
  void capture(std::size_t index) {
#pragma omp critical(shotlocker_first_error)
    {
      if (!error_ || index < index_) {
        error_ = std::current_exception();
        index_ = index;
      }
    }
  }

  void rethrow() const {
    if (error_) std::rethrow_exception(error_);
  }

 private:
  std::exception_ptr error_;
  std::size_t index_ = 0;
};

}  // namespace shotlocker::detail
