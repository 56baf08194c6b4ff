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

#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <queue>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include "pvdyn/model.hpp"

// Reader and writer for the subset of URDF the library understands: links
// with <inertial>, and revolute/continuous/prismatic/fixed/floating joints
// with <origin> and <axis>. Visual, collision and limit tags are ignored.
//
// A root link without <inertial> is the world. If it has a single floating
// child joint the child becomes a floating base; a fixed child becomes a
// fixed base placed at the joint origin; otherwise the world itself is the
// (massless) fixed base.
namespace pvdyn
{

  namespace urdf_detail
  {
    using boost::property_tree::ptree;

    inline std::vector<double> numbers(const std::string & text, std::size_t count, const std::string & what)
    {
      std::istringstream in(text);
      std::vector<double> out;
      double x;
      while (in >> x)
        out.push_back(x);
      if (!in.eof() || out.size() != count)
        throw MalformedXml("attribute '" + what + "' expects " + std::to_string(count) + " numbers, got '" + text
                           + "'");
      return out;
    }

    inline Vector3 vec3_attr(const ptree & node, const std::string & attr, const Vector3 & fallback)
    {
      const auto text = node.get_optional<std::string>("<xmlattr>." + attr);
      if (!text)
        return fallback;
      const auto v = numbers(*text, 3, attr);
      return {v[0], v[1], v[2]};
    }

    inline double number_attr(const ptree & node, const std::string & attr, const std::string & where)
    {
      const auto text = node.get_optional<std::string>("<xmlattr>." + attr);
      if (!text)
        throw MalformedXml(where + " is missing attribute '" + attr + "'");
      return numbers(*text, 1, attr)[0];
    }

    /// R = Rz(yaw) Ry(pitch) Rx(roll).
    inline Matrix3 rpy_matrix(const Vector3 & rpy)
    {
      return (Eigen::AngleAxisd(rpy.z(), Vector3::UnitZ()) * Eigen::AngleAxisd(rpy.y(), Vector3::UnitY())
              * Eigen::AngleAxisd(rpy.x(), Vector3::UnitX()))
        .toRotationMatrix();
    }

    inline Vector3 matrix_rpy(const Matrix3 & R)
    {
      const double pitch = std::atan2(-R(2, 0), std::hypot(R(0, 0), R(1, 0)));
      const double yaw = std::atan2(R(1, 0), R(0, 0));
      const double roll = std::atan2(R(2, 1), R(2, 2));
      return {roll, pitch, yaw};
    }

    /// Pose of a child frame given in its parent: x_parent = R x_child + p.
    inline PlueckerTransform origin_transform(const ptree & node)
    {
      const auto origin = node.get_child_optional("origin");
      if (!origin)
        return PlueckerTransform::Identity();
      const Vector3 xyz = vec3_attr(*origin, "xyz", Vector3::Zero());
      const Vector3 rpy = vec3_attr(*origin, "rpy", Vector3::Zero());
      return {rpy_matrix(rpy).transpose(), xyz};
    }

    struct LinkDesc
    {
      std::string name;
      std::optional<SpatialInertia> inertia;
    };

    struct JointDesc
    {
      std::string name;
      std::string type;
      std::string parent;
      std::string child;
      PlueckerTransform origin;
      Vector3 axis = Vector3::UnitX();
    };

    inline SpatialInertia parse_inertial(const ptree & node, const std::string & link)
    {
      const std::string where = "inertial of link '" + link + "'";
      const auto mass_node = node.get_child_optional("mass");
      const auto inertia_node = node.get_child_optional("inertia");
      if (!mass_node || !inertia_node)
        throw MalformedXml(where + " needs <mass> and <inertia>");
      const double mass = number_attr(*mass_node, "value", where);
      Matrix3 I;
      I(0, 0) = number_attr(*inertia_node, "ixx", where);
      I(1, 1) = number_attr(*inertia_node, "iyy", where);
      I(2, 2) = number_attr(*inertia_node, "izz", where);
      I(0, 1) = I(1, 0) = number_attr(*inertia_node, "ixy", where);
      I(0, 2) = I(2, 0) = number_attr(*inertia_node, "ixz", where);
      I(1, 2) = I(2, 1) = number_attr(*inertia_node, "iyz", where);
      const PlueckerTransform frame = origin_transform(node);
      const Matrix3 R = frame.rotation.transpose();
      return SpatialInertia::FromMassComInertia(mass, frame.translation, Matrix3(R * I * R.transpose()));
    }

    inline std::string fmt(double x)
    {
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g", x);
      return buf;
    }

    inline std::string fmt(const Vector3 & v) { return fmt(v.x()) + " " + fmt(v.y()) + " " + fmt(v.z()); }
  } // namespace urdf_detail

  inline Model parse_urdf_subset(const std::string & text)
  {
    using namespace urdf_detail;
    ptree doc;
    try
    {
      std::istringstream in(text);
      boost::property_tree::read_xml(in, doc);
    }
    catch (const boost::property_tree::xml_parser_error & e)
    {
      throw MalformedXml(e.what());
    }
    const auto robot = doc.get_child_optional("robot");
    if (!robot)
      throw MalformedXml("missing <robot> element");

    std::vector<LinkDesc> links;
    std::vector<JointDesc> joints;
    std::map<std::string, std::size_t> link_index;
    for (const auto & [tag, node] : *robot)
    {
      if (tag == "link")
      {
        LinkDesc l;
        l.name = node.get<std::string>("<xmlattr>.name", "");
        if (l.name.empty())
          throw MalformedXml("link without a name");
        if (link_index.count(l.name))
          throw MalformedXml("duplicate link '" + l.name + "'");
        if (const auto inertial = node.get_child_optional("inertial"))
          l.inertia = parse_inertial(*inertial, l.name);
        link_index[l.name] = links.size();
        links.push_back(std::move(l));
      }
      else if (tag == "joint")
      {
        JointDesc j;
        j.name = node.get<std::string>("<xmlattr>.name", "");
        j.type = node.get<std::string>("<xmlattr>.type", "");
        j.parent = node.get<std::string>("parent.<xmlattr>.link", "");
        j.child = node.get<std::string>("child.<xmlattr>.link", "");
        if (j.name.empty() || j.type.empty() || j.parent.empty() || j.child.empty())
          throw MalformedXml("joint '" + j.name + "' needs a name, type, parent and child");
        if (j.type != "revolute" && j.type != "continuous" && j.type != "prismatic" && j.type != "fixed"
            && j.type != "floating")
          throw UnsupportedJointType("joint '" + j.name + "' has unsupported type '" + j.type + "'");
        j.origin = origin_transform(node);
        if (const auto axis = node.get_child_optional("axis"))
          j.axis = vec3_attr(*axis, "xyz", Vector3::UnitX());
        if (j.axis.norm() < 1e-12)
          throw MalformedXml("joint '" + j.name + "' has a zero axis");
        j.axis.normalize();
        joints.push_back(std::move(j));
      }
    }
    if (links.empty())
      throw MalformedXml("robot has no links");

    // Tree structure: one parent joint per link, exactly one root, and
    // every link reachable from it.
    std::vector<int> parent_joint(links.size(), -1);
    std::vector<std::vector<int>> child_joints(links.size());
    for (std::size_t k = 0; k < joints.size(); ++k)
    {
      const auto p = link_index.find(joints[k].parent);
      const auto c = link_index.find(joints[k].child);
      if (p == link_index.end() || c == link_index.end())
        throw MalformedXml("joint '" + joints[k].name + "' references an unknown link");
      if (parent_joint[c->second] >= 0)
        throw KinematicLoop("link '" + joints[k].child + "' is the child of more than one joint");
      parent_joint[c->second] = static_cast<int>(k);
      child_joints[p->second].push_back(static_cast<int>(k));
    }
    std::vector<std::size_t> roots;
    for (std::size_t i = 0; i < links.size(); ++i)
      if (parent_joint[i] < 0)
        roots.push_back(i);
    if (roots.empty())
      throw KinematicLoop("joint graph has no root link");
    if (roots.size() > 1)
      throw MalformedXml("robot has more than one root link ('" + links[roots[0]].name + "', '"
                         + links[roots[1]].name + "')");

    std::size_t root = roots[0];
    BaseType base = BaseType::Fixed;
    PlueckerTransform base_placement = PlueckerTransform::Identity();
    SpatialInertia base_inertia(0.0, Vector3::Zero(), Matrix3::Zero());
    if (!links[root].inertia)
    {
      const auto & kids = child_joints[root];
      if (kids.size() == 1 && (joints[static_cast<std::size_t>(kids[0])].type == "floating"
                               || joints[static_cast<std::size_t>(kids[0])].type == "fixed"))
      {
        const JointDesc & j = joints[static_cast<std::size_t>(kids[0])];
        base = j.type == "floating" ? BaseType::Floating : BaseType::Fixed;
        base_placement = j.origin;
        root = link_index.at(j.child);
        if (!links[root].inertia)
          throw MissingInertial("base link '" + links[root].name + "' has no <inertial>");
        base_inertia = *links[root].inertia;
      }
    }
    else
      base_inertia = *links[root].inertia;

    ModelBuilder b(links[root].name, base, base_inertia, base_placement);
    std::vector<int> model_index(links.size(), -1);
    model_index[root] = 0;
    // Parents first; among ready links the one listed first in the file
    // wins, so files that are already topologically ordered keep their order.
    std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
    ready.push(root);
    std::size_t visited = 1;
    while (!ready.empty())
    {
      const std::size_t l = ready.top();
      ready.pop();
      for (const int k : child_joints[l])
        ready.push(link_index.at(joints[static_cast<std::size_t>(k)].child));
      if (l == root)
        continue;
      const JointDesc & j = joints[static_cast<std::size_t>(parent_joint[l])];
      Joint joint;
      if (j.type == "revolute" || j.type == "continuous")
        joint = Joint::Revolute(j.axis);
      else if (j.type == "prismatic")
        joint = Joint::Prismatic(j.axis);
      else if (j.type == "fixed")
        joint = Joint::Fixed();
      else
        throw UnsupportedJointType("floating joint '" + j.name + "' is only supported between the world and the base");
      SpatialInertia I(0.0, Vector3::Zero(), Matrix3::Zero());
      if (links[l].inertia)
        I = *links[l].inertia;
      else if (joint.nv() > 0)
        throw MissingInertial("link '" + links[l].name + "' has no <inertial>");
      const int parent = model_index[link_index.at(j.parent)];
      model_index[l] = b.add_link(links[l].name, parent, joint, j.origin, I);
      ++visited;
    }
    const std::size_t expected = links.size() - (root == roots[0] ? 0 : 1);
    if (visited != expected)
      throw KinematicLoop("some links are not connected to the root");
    return b.build();
  }

  inline Model load_urdf(const std::string & path)
  {
    std::ifstream in(path);
    if (!in)
      throw IoError("cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_urdf_subset(ss.str());
  }

  /// Writes the model in the same subset; parse_urdf_subset reads it back
  /// to the same fields and link order (gravity is not part of the format).
  inline std::string serialize_urdf(const Model & model, const std::string & robot_name = "pvdyn")
  {
    using urdf_detail::fmt;
    std::ostringstream out;
    out << "<?xml version=\"1.0\"?>\n<robot name=\"" << robot_name << "\">\n";

    auto origin = [&](const PlueckerTransform & X) {
      return "    <origin xyz=\"" + fmt(X.translation) + "\" rpy=\"" + fmt(urdf_detail::matrix_rpy(X.rotation.transpose()))
             + "\"/>\n";
    };
    auto link = [&](std::size_t i) {
      const SpatialInertia & I = model.inertias[i];
      out << "  <link name=\"" << model.names[i] << "\">\n";
      if (I.mass > 0.0)
      {
        const Matrix3 Ic = I.inertia_about_com();
        out << "    <inertial>\n      <origin xyz=\"" << fmt(I.com()) << "\" rpy=\"0 0 0\"/>\n"
            << "      <mass value=\"" << fmt(I.mass) << "\"/>\n"
            << "      <inertia ixx=\"" << fmt(Ic(0, 0)) << "\" ixy=\"" << fmt(Ic(0, 1)) << "\" ixz=\"" << fmt(Ic(0, 2))
            << "\" iyy=\"" << fmt(Ic(1, 1)) << "\" iyz=\"" << fmt(Ic(1, 2)) << "\" izz=\"" << fmt(Ic(2, 2))
            << "\"/>\n    </inertial>\n";
      }
      out << "  </link>\n";
    };

    const bool floating = model.base_type() == BaseType::Floating;
    const bool placed = !model.placements[0].isApprox(PlueckerTransform::Identity(), 0.0);
    if (floating || placed)
    {
      if (model.inertias[0].mass <= 0.0)
        throw InvalidModel("a placed or floating base needs a positive mass to be serialized");
      std::string world = "world";
      while (model.find_link(world) >= 0)
        world += "_";
      out << "  <link name=\"" << world << "\"/>\n";
      out << "  <joint name=\"" << model.names[0] << "_joint\" type=\"" << (floating ? "floating" : "fixed") << "\">\n"
          << "    <parent link=\"" << world << "\"/>\n    <child link=\"" << model.names[0] << "\"/>\n"
          << origin(model.placements[0]) << "  </joint>\n";
    }
    for (std::size_t i = 0; i < model.parents.size(); ++i)
    {
      link(i);
      if (i == 0)
        continue;
      const Joint & j = model.joints[i];
      std::string type = j.type == JointType::Revolute ? "continuous" : j.type == JointType::Prismatic ? "prismatic" : "fixed";
      out << "  <joint name=\"" << model.names[i] << "_joint\" type=\"" << type << "\">\n"
          << "    <parent link=\"" << model.names[static_cast<std::size_t>(model.parents[i])] << "\"/>\n"
          << "    <child link=\"" << model.names[i] << "\"/>\n"
          << origin(model.placements[i]);
      if (j.nv() > 0)
        out << "    <axis xyz=\"" << fmt(j.axis) << "\"/>\n";
      out << "  </joint>\n";
    }
    out << "</robot>\n";
    return out.str();
  }

} // namespace pvdyn
