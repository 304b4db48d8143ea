#pragma once

#include <virial/algebroid.hpp>
#include <virial/algebroid_hamiltonian.hpp>
#include <virial/algebroid_lagrangian.hpp>
#include <virial/averaging.hpp>
#include <virial/frame.hpp>
#include <virial/integrate.hpp>
#include <virial/jets.hpp>
#include <virial/models.hpp>
#include <virial/tq_dynamics.hpp>
#include <virial/tstarq_dynamics.hpp>
