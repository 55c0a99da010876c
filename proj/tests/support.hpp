#pragma once

#include <string>

#include "rclab/sysdef.hpp"

namespace rclab::test {

inline std::string data_path(const std::string& name) { return std::string(RCLAB_DATA_DIR) + "/" + name; }

inline sysdef::SystemModel load(const std::string& name) { return sysdef::load_system_file(data_path(name)); }

inline sysdef::PairModel load_pair(const std::string& name) { return sysdef::load_pair_file(data_path(name)); }

inline TangentPoint tp(std::initializer_list<double> q, std::initializer_list<double> qdot) {
  TangentPoint v{Vec(static_cast<Eigen::Index>(q.size())), Vec(static_cast<Eigen::Index>(qdot.size()))};
  Eigen::Index i = 0;
  for (double x : q) v.q[i++] = x;
  i = 0;
  for (double x : qdot) v.qdot[i++] = x;
  return v;
}

inline Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

inline double max_abs(const Eigen::MatrixXd& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace rclab::test
