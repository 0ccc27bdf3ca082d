#pragma once

#include <stdexcept>
#include <string>

namespace grounder {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A point was mapped through a region it does not lie in.
class OutOfRegion : public Error {
public:
    using Error::Error;
};

/// No admissible crop can contain the requested box.
class Infeasible : public Error {
public:
    using Error::Error;
};

class EmptySampleSet : public Error {
public:
    EmptySampleSet() : Error("aggregation over an empty sample set") {}
};

/// Every rollout of a stage failed to parse (or fell outside its frame).
class AllSamplesFailed : public Error {
public:
    using Error::Error;
};

class PredictorUnavailable : public Error {
public:
    using Error::Error;
};

class Timeout : public PredictorUnavailable {
public:
    using PredictorUnavailable::PredictorUnavailable;
};

class GroupTooSmall : public Error {
public:
    GroupTooSmall() : Error("group-relative scoring needs at least two rewards") {}
};

/// A configuration value violates the invariant of the type that owns it.
class InvalidConfig : public Error {
public:
    using Error::Error;
};

class Unreadable : public Error {
public:
    using Error::Error;
};

class EmptyDataset : public Error {
public:
    using Error::Error;
};

}  // namespace grounder
