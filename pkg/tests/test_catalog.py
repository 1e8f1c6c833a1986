import shutil

import pytest
import yaml

from conftest import FIXTURES
from slicekit.catalog import (
    AllowedValues,
    ReliabilityReq,
    Triplet,
    VnfPlan,
    load_catalog,
    resolve_triplet,
)
from slicekit.errors import CyclicNesting, DanglingRef, NestedTripletMissing, ParseError


def test_fixture_catalog_loads(catalog):
    assert "vnf-cache" in catalog.vnfs
    assert "ns-embb-video" in catalog.nsds
    assert "tpl-embb-video" in catalog.templates


def test_catalog_ids_are_sorted(catalog):
    assert list(catalog.vnfs) == sorted(catalog.vnfs)
    assert list(catalog.nsds) == sorted(catalog.nsds)


def test_function_tag_chain_walks_nested_depth_first(catalog):
    # own VNFs first, nested control-plane NS appended after
    assert catalog.function_tag_chain("ns-embb-video") == [
        "cache",
        "epc-up",
        "epc-cp",
        "firewall",
    ]


class TestResolveTriplet:
    def test_flat_expansion(self, catalog):
        dep = resolve_triplet(catalog, Triplet("ns-iot-gw", "solo", "gw-1"))
        assert [d.unit for d in dep.vnf_entries] == ["ns-iot-gw:vnf-iot-gw"]
        assert dep.link_entries == ()

    def test_nested_expansion_prefixes_units(self, catalog):
        dep = resolve_triplet(catalog, Triplet("ns-embb-video", "standard", "il-25"))
        units = [d.unit for d in dep.vnf_entries]
        assert "ns-embb-video:vnf-cache" in units
        assert "ns-embb-video/ns-core-cp:vnf-epc-cp" in units
        # nested affinity peers stay inside the nested scope
        cp_fw = next(d for d in dep.vnf_entries if d.unit.endswith(":vnf-fw"))
        assert cp_fw.affinity_rules[0].peer == "ns-embb-video/ns-core-cp:vnf-epc-cp"

    def test_backups_are_extra_deployed_instances(self, catalog):
        # il-100 plans 2 cache instances plus 1 backup
        dep = resolve_triplet(catalog, Triplet("ns-embb-video", "standard", "il-100"))
        cache = next(d for d in dep.vnf_entries if d.vnf_ref == "vnf-cache")
        assert cache.instance_count == 3
        assert cache.reliability.backup_count == 1
        assert cache.total == cache.per_instance.scaled(3)

def test_backup_count_must_stay_below_instances():
    with pytest.raises(ValueError):
        VnfPlan(instance_count=1, resource_level="small", reliability=ReliabilityReq(backup_count=1))


class TestAllowedValues:
    def test_range(self):
        av = AllowedValues(min=100, max=400)
        assert av.contains(100) and av.contains(400)
        assert not av.contains(99.9)
        assert not av.contains(True)  # bools sneak through int checks otherwise
        assert av.describe() == "[100, 400]"

    def test_choices(self):
        av = AllowedValues(choices=(["emea"], ["apac"]))
        assert av.contains(["emea"])
        assert not av.contains(["arctic"])

    def test_empty_range_rejected(self):
        with pytest.raises(ValueError):
            AllowedValues(min=5, max=4)


class TestLoaderDefects:
    @pytest.fixture
    def workdir(self, tmp_path):
        for name in ("vnfs.yaml", "nsds.yaml", "templates.yaml"):
            shutil.copyfile(FIXTURES / "catalog" / name, tmp_path / name)
        return tmp_path

    def _mutate(self, workdir, fname, fn):
        doc = yaml.safe_load((workdir / fname).read_text())
        fn(doc)
        (workdir / fname).write_text(yaml.safe_dump(doc))

    def test_missing_files_mean_empty_sections(self, tmp_path):
        cat = load_catalog(tmp_path)
        assert cat.vnfs == {} and cat.nsds == {} and cat.templates == {}

    def test_dangling_vnf_ref(self, workdir):
        def fn(doc):
            doc["nsds"][0]["vnf_refs"].append("vnf-ghost")

        self._mutate(workdir, "nsds.yaml", fn)
        with pytest.raises(DanglingRef):
            load_catalog(workdir)

    def test_plan_for_inactive_vnf(self, workdir):
        def fn(doc):
            nsd = next(n for n in doc["nsds"] if n["id"] == "ns-core-cp")
            flavor = nsd["flavors"][0]
            flavor["instantiation_levels"][0]["vnf_plans"]["vnf-cache"] = {
                "instance_count": 1,
                "resource_level": "small",
            }

        self._mutate(workdir, "nsds.yaml", fn)
        with pytest.raises(ParseError):
            load_catalog(workdir)

    def test_unknown_resource_level(self, workdir):
        def fn(doc):
            nsd = next(n for n in doc["nsds"] if n["id"] == "ns-iot-gw")
            il = nsd["flavors"][0]["instantiation_levels"][0]
            il["vnf_plans"]["vnf-iot-gw"]["resource_level"] = "xxl"

        self._mutate(workdir, "nsds.yaml", fn)
        with pytest.raises(DanglingRef):
            load_catalog(workdir)

    def test_nesting_cycle(self, workdir):
        def fn(doc):
            cp = next(n for n in doc["nsds"] if n["id"] == "ns-core-cp")
            cp["nested_ns_refs"] = ["ns-embb-video"]

        self._mutate(workdir, "nsds.yaml", fn)
        with pytest.raises(CyclicNesting):
            load_catalog(workdir)

    def test_geo_req_for_unknown_node(self, workdir):
        def fn(doc):
            doc["templates"][0]["geo_reqs"] = {"submarine": ["emea"]}

        self._mutate(workdir, "templates.yaml", fn)
        with pytest.raises(ParseError):
            load_catalog(workdir)

    def test_schema_violation_points_at_path(self, workdir):
        def fn(doc):
            del doc["vnfs"][0]["function_tag"]

        self._mutate(workdir, "vnfs.yaml", fn)
        with pytest.raises(ParseError):
            load_catalog(workdir)

    def test_missing_nested_choice_surfaces_on_resolve(self, workdir):
        def fn(doc):
            nsd = next(n for n in doc["nsds"] if n["id"] == "ns-embb-video")
            il = nsd["flavors"][0]["instantiation_levels"][0]
            il.pop("nested_triplets", None)

        self._mutate(workdir, "nsds.yaml", fn)
        cat = load_catalog(workdir)  # structurally fine, choice is per-level
        with pytest.raises(NestedTripletMissing):
            resolve_triplet(cat, Triplet("ns-embb-video", "standard", "il-25"))
