// Copyright 2026 The pvdyn Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace pvdyn
{

  /// Base of every exception thrown by the library.
  class Error : public std::runtime_error
  {
  public:
    using std::runtime_error::runtime_error;
  };

#define PVDYN_DEFINE_ERROR(Name)                                                                   \
  class Name : public Error                                                                        \
  {                                                                                                \
  public:                                                                                          \
    explicit Name(const std::string & what) : Error(#Name ": " + what) {}                         \
  }

  PVDYN_DEFINE_ERROR(DimensionMismatch);
  PVDYN_DEFINE_ERROR(InvalidModel);
  PVDYN_DEFINE_ERROR(InvalidConstraint);

  // URDF ingestion
  PVDYN_DEFINE_ERROR(MalformedXml);
  PVDYN_DEFINE_ERROR(UnsupportedJointType);
  PVDYN_DEFINE_ERROR(KinematicLoop);
  PVDYN_DEFINE_ERROR(MissingInertial);

  // Numerical failures
  PVDYN_DEFINE_ERROR(SingularJointInertia);
  PVDYN_DEFINE_ERROR(NotPositiveDefinite);
  PVDYN_DEFINE_ERROR(SingularDual);
  PVDYN_DEFINE_ERROR(SingularBaseInertia);

  // Harness
  PVDYN_DEFINE_ERROR(UnknownAlgorithm);
  PVDYN_DEFINE_ERROR(ModelLoadError);
  PVDYN_DEFINE_ERROR(IoError);

#undef PVDYN_DEFINE_ERROR

} // namespace pvdyn
