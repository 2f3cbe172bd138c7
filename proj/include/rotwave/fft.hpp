#pragma once

#include <complex>
#include <mutex>
#include <stdexcept>

#include <fftw3.h>

namespace rotwave {

namespace detail {

// The FFTW planner is not re-entrant; execution is.
inline std::mutex& fftw_planner_mutex()
{
	static std::mutex m;
	return m;
}

} // namespace detail

/// In-place forward/backward FFTs over `howmany` contiguous columns of
/// length `n`. Plans are bound to the buffer they were created for.
class batched_fft {
public:
	batched_fft(std::complex<double>* data, int n, int howmany) : data_(data), n_(n)
	{
		auto* buf = reinterpret_cast<fftw_complex*>(data);
		std::lock_guard lock(detail::fftw_planner_mutex());
		forward_ = fftw_plan_many_dft(1, &n, howmany, buf, nullptr, 1, n, buf, nullptr, 1, n, FFTW_FORWARD,
		                              FFTW_ESTIMATE);
		backward_ = fftw_plan_many_dft(1, &n, howmany, buf, nullptr, 1, n, buf, nullptr, 1, n, FFTW_BACKWARD,
		                               FFTW_ESTIMATE);
		if (forward_ == nullptr || backward_ == nullptr)
			throw std::runtime_error("FFTW planning failed");
	}

	batched_fft(const batched_fft&) = delete;
	batched_fft& operator=(const batched_fft&) = delete;

	~batched_fft()
	{
		std::lock_guard lock(detail::fftw_planner_mutex());
		fftw_destroy_plan(forward_);
		fftw_destroy_plan(backward_);
	}

	void forward() { fftw_execute(forward_); }
	/// Unnormalized: the caller folds 1/n into its momentum-space multiplier.
	void backward() { fftw_execute(backward_); }

	std::complex<double>* data() const { return data_; }
	int size() const { return n_; }

private:
	std::complex<double>* data_;
	int n_;
	fftw_plan forward_ = nullptr;
	fftw_plan backward_ = nullptr;
};

} // namespace rotwave
