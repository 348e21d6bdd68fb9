// docws/docws.hpp

// Copyright 2026 The docws Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

// Umbrella header.

#ifndef DOCWS_DOCWS_HPP_
#define DOCWS_DOCWS_HPP_

#include "docws/cage.hpp"
#include "docws/document.hpp"
#include "docws/errors.hpp"
#include "docws/eval.hpp"
#include "docws/features.hpp"
#include "docws/io.hpp"
#include "docws/lf.hpp"
#include "docws/seed.hpp"
#include "docws/synth.hpp"
#include "docws/trainer.hpp"
#include "docws/version.hpp"

#endif  // DOCWS_DOCWS_HPP_
