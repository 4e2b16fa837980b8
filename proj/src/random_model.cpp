/*
 * Copyright 2026 The TinyReID Authors. All Rights Reserved.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "tinyreid/random_model.hpp"

#include <cmath>

namespace tinyreid {

uint64_t DeterministicRng::below(uint64_t n) {
  const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  uint64_t x = 0;
  do {
    x = engine_();
  } while (x >= limit);
  return x % n;
}

ModelWeightsF32 generate_random_model(const ModelSpec& spec, uint64_t seed) {
  DeterministicRng rng(seed);
  ModelWeightsF32 model;
  model.spec = spec;
  for (const ParamSlot& slot : param_slots(spec)) {
    LayerWeightsF32 w;
    w.kernel = TensorF(slot.kernel_dims());
    const double fan_in = slot.op == ParamOp::Depthwise
                              ? static_cast<double>(slot.kernel * slot.kernel)
                              : static_cast<double>(slot.kernel * slot.kernel * slot.cin);
    const double gain = slot.relu6 ? 2.0 : 1.0;
    // Uniform(-a, a) has variance a^2 / 3.
    const double bound = std::sqrt(3.0 * gain / fan_in);
    for (float& v : w.kernel.values()) v = static_cast<float>(rng.uniform(-bound, bound));
    if (slot.has_channel_scale) {
      w.scale.resize(slot.cout);
      for (float& s : w.scale) s = static_cast<float>(rng.uniform(0.75, 1.25));
    }
    w.bias.resize(slot.cout);
    for (float& b : w.bias) b = static_cast<float>(rng.uniform(-0.1, 0.1));
    model.layers.push_back(std::move(w));
  }
  return model;
}

}  // namespace tinyreid
