#pragma once

#include <stdexcept>
#include <string>

namespace bcmer
{

/// Root of every error raised by the library.
class Error : public std::runtime_error
{
public:
	using std::runtime_error::runtime_error;
};

#define BCMER_DEFINE_ERROR(NAME)             \
	class NAME : public Error                \
	{                                        \
	public:                                  \
		using Error::Error;                  \
	};

BCMER_DEFINE_ERROR(DimensionError)
BCMER_DEFINE_ERROR(IndexError)
BCMER_DEFINE_ERROR(ContractError)
BCMER_DEFINE_ERROR(EmptyPoolError)
BCMER_DEFINE_ERROR(UnsupportedDimensionError)
BCMER_DEFINE_ERROR(SizeError)
BCMER_DEFINE_ERROR(ActionError)
BCMER_DEFINE_ERROR(NameError)
BCMER_DEFINE_ERROR(TrainingError)
BCMER_DEFINE_ERROR(ExternalTeacherError)
BCMER_DEFINE_ERROR(LengthError)
BCMER_DEFINE_ERROR(EmptyError)
BCMER_DEFINE_ERROR(FormatError)
BCMER_DEFINE_ERROR(ValueError)

#undef BCMER_DEFINE_ERROR

} // namespace bcmer
