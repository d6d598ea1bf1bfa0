#pragma once

#include <vector>

#include "emstress/field_image.hpp"
#include "emstress/stress_field.hpp"
#include "emstress/tree.hpp"

namespace emstress {

// Branch index owning each pixel (-1 off-wire). Where footprints overlap the
// branch with the lowest id wins.
std::vector<int> pixel_owners(const InterconnectTree& tree);

// Each wire pixel carries its owning branch's signed current density.
FieldImage rasterize_current(const InterconnectTree& tree);

// Each wire pixel carries the owning branch's stress at the pixel's position
// along the branch axis (pixel coordinate minus the low node coordinate, in
// um), interpolated through the cell centres. Throws std::out_of_range when the
// field has no snapshot at time_s.
FieldImage rasterize_stress(const InterconnectTree& tree, const StressField& field, double time_s);

}  // namespace emstress
