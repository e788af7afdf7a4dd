#!/usr/bin/env python3
"""Rebuild the bundled India tables and geometry under src/clustersim/data/india.

Input geometry is the state-level GeoJSON shipped with the ``datamaps`` npm
package (MIT, derived from Natural Earth):

    npm pack datamaps@0.5.10 && tar xzf datamaps-0.5.10.tgz
    python tools/build_india_data.py package/src/js/data/ind.json

Requires shapely and pyproj, which the simulator itself does not use.
"""
import argparse
import csv
import json
from pathlib import Path

from pyproj import Geod, Transformer
from shapely import coverage_simplify
from shapely.geometry import MultiPolygon, Polygon, mapping, shape
from shapely.ops import transform, unary_union

OUT = Path(__file__).resolve().parents[1] / "src" / "clustersim" / "data" / "india"

# Albers equal-area conic centred on the subcontinent, output in km.
PROJ = "+proj=aea +lat_1=12 +lat_2=28 +lat_0=20 +lon_0=80 +datum=WGS84 +units=km +no_defs"

NE_GROUP = "Sikkim+Manipur+Nagaland+Tripura+Meghalaya+Mizoram"
NE_MEMBERS = ["Sikkim", "Manipur", "Nagaland", "Tripura", "Meghalaya", "Mizoram"]

RENAME = {"Orissa": "Odisha", "Uttaranchal": "Uttarakhand", "Delhi": "New Delhi"}

# Approximate cut lines (lon, lat) for states created after the source map.
TELANGANA_CUT = Polygon([
    (76.0, 16.3), (77.6, 16.3), (78.3, 16.0), (78.9, 16.1), (79.3, 16.6),
    (79.9, 16.8), (80.3, 17.0), (80.9, 17.3), (81.5, 17.8), (81.5, 20.5),
    (76.0, 20.5),
])
LADAKH_CUT = Polygon([
    (75.6, 36.5), (75.6, 34.6), (75.45, 34.35), (75.9, 33.95), (76.25, 33.6),
    (76.4, 33.2), (76.75, 32.95), (77.0, 32.6), (77.0, 31.0), (80.5, 31.0),
    (80.5, 36.5),
])

# name: (census-2011 population, clusters, infected clusters on day 0, official area km2)
STATES = {
    "Kerala": (33406061, 852, 40, 38863),
    "Goa": (1458545, 45, 0, 3702),
    "Gujarat": (60439692, 1411, 7, 196024),
    "Rajasthan": (68548437, 1679, 19, 342239),
    "Punjab": (27743338, 697, 3, 50362),
    "Tamil Nadu": (72147030, 1886, 3, 130058),
    "Karnataka": (61095297, 1515, 15, 191791),
    "Maharashtra": (112374333, 2845, 54, 307713),
    "Madhya Pradesh": (72626809, 1755, 4, 308252),
    "Haryana": (25351462, 619, 19, 44212),
    "Andhra Pradesh": (49577103, 853, 3, 162968),
    "Telangana": (35003674, 1294, 19, 112077),
    "Chhattisgarh": (25545198, 600, 1, 135192),
    "Uttar Pradesh": (199812341, 5000, 26, 240928),
    "New Delhi": (16787941, 435, 22, 1484),
    "Himachal Pradesh": (6864602, 167, 2, 55673),
    "Uttarakhand": (10086292, 266, 3, 53483),
    "Odisha": (41974218, 1012, 2, 155707),
    "Jharkhand": (32988134, 746, 0, 79716),
    "Bihar": (104099452, 2519, 0, 94163),
    "Ladakh": (274289, 29, 10, 59146),
    "Jammu & Kashmir": (12267013, 284, 4, 42241),
    "West Bengal": (91276115, 2225, 2, 88752),
    "Arunachal Pradesh": (1383727, 36, 0, 83743),
    "Assam": (31205576, 773, 0, 78438),
    NE_GROUP: (13182885, 375, 0, 99998),
}

# National fallback for the daily-movement standard deviation (km).
MOVE_STDDEV_KM = 10.0

# Census-2011 all-India decadal age profile (0-9, ..., 70-79, 80+), millions.
AGE_MILLIONS = [241.1, 253.2, 212.8, 173.7, 134.7, 89.7, 64.6, 27.7, 9.6]
AGE_BINS = ["0-9", "10-19", "20-29", "30-39", "40-49", "50-59", "60-69", "70-79", "80+"]

# Share of confirmed cases per age bin, China, Feb 2020 (percent).
CASE_SHARE_PCT = [0.9, 1.2, 8.1, 17.0, 19.2, 22.4, 19.2, 8.8, 3.2]

# Principal inter-state streams, thousands of persons (origin -> destination),
# rounded from the census-2001 migration highlights.
MIGRATION_THOUSANDS = {
    "Uttar Pradesh": {"New Delhi": 2300, "Maharashtra": 2000, "Haryana": 800,
                      "Uttarakhand": 600, "Madhya Pradesh": 600, "Punjab": 400,
                      "Gujarat": 400, "West Bengal": 300, "Rajasthan": 300, "Bihar": 300},
    "Bihar": {"New Delhi": 1000, "West Bengal": 1000, "Jharkhand": 1000,
              "Maharashtra": 500, "Uttar Pradesh": 600, "Haryana": 300, "Punjab": 300,
              "Assam": 200},
    "Rajasthan": {"Gujarat": 800, "Madhya Pradesh": 500, "Maharashtra": 400,
                  "Haryana": 400, "New Delhi": 400, "Uttar Pradesh": 200},
    "Madhya Pradesh": {"Maharashtra": 600, "Uttar Pradesh": 500, "Chhattisgarh": 400,
                       "Gujarat": 300, "Rajasthan": 300, "New Delhi": 200},
    "Karnataka": {"Maharashtra": 900, "Andhra Pradesh": 300, "Tamil Nadu": 300,
                  "Kerala": 200, "Goa": 100},
    "Andhra Pradesh": {"Karnataka": 600, "Tamil Nadu": 400, "Maharashtra": 300,
                       "Telangana": 400, "Odisha": 100},
    "Telangana": {"Maharashtra": 300, "Karnataka": 300, "Andhra Pradesh": 300},
    "Tamil Nadu": {"Karnataka": 700, "Kerala": 300, "Andhra Pradesh": 300,
                   "Maharashtra": 300},
    "Kerala": {"Tamil Nadu": 400, "Karnataka": 400, "Maharashtra": 200},
    "Maharashtra": {"Gujarat": 400, "Karnataka": 400, "Madhya Pradesh": 300,
                    "Goa": 100, "Telangana": 100},
    "Gujarat": {"Maharashtra": 500, "Rajasthan": 200, "Madhya Pradesh": 200},
    "Haryana": {"New Delhi": 600, "Punjab": 200, "Rajasthan": 200, "Uttar Pradesh": 200},
    "Punjab": {"Haryana": 300, "New Delhi": 200, "Himachal Pradesh": 100,
               "Rajasthan": 100},
    "New Delhi": {"Haryana": 400, "Uttar Pradesh": 400},
    "West Bengal": {"Jharkhand": 300, "Bihar": 200, "Odisha": 200, "Assam": 200,
                    "Maharashtra": 200, "New Delhi": 200},
    "Odisha": {"West Bengal": 200, "Chhattisgarh": 200, "Jharkhand": 200,
               "Gujarat": 200, "Andhra Pradesh": 100},
    "Jharkhand": {"West Bengal": 300, "Bihar": 300, "Odisha": 200, "Chhattisgarh": 100},
    "Chhattisgarh": {"Madhya Pradesh": 300, "Odisha": 200, "Maharashtra": 200},
    "Uttarakhand": {"Uttar Pradesh": 200, "New Delhi": 200, "Himachal Pradesh": 50},
    "Himachal Pradesh": {"Punjab": 100, "Haryana": 50, "New Delhi": 50},
    "Jammu & Kashmir": {"Punjab": 100, "Himachal Pradesh": 50, "New Delhi": 50},
    "Ladakh": {"Jammu & Kashmir": 5},
    "Assam": {"West Bengal": 200, "Arunachal Pradesh": 100, NE_GROUP: 200},
    NE_GROUP: {"Assam": 200, "West Bengal": 100},
    "Arunachal Pradesh": {"Assam": 30},
    "Goa": {"Maharashtra": 30, "Karnataka": 30},
}


def load_source(path):
    with open(path) as fh:
        fc = json.load(fh)
    return {f["properties"]["name"]: shape(f["geometry"]) for f in fc["features"]
            if f["properties"]["name"]}


def regroup(src):
    ap, jk = src["Andhra Pradesh"], src["Jammu and Kashmir"]
    out = {RENAME.get(k, k): v for k, v in src.items()}
    out["Telangana"] = ap.intersection(TELANGANA_CUT)
    out["Andhra Pradesh"] = ap.difference(TELANGANA_CUT)
    out["Ladakh"] = jk.intersection(LADAKH_CUT)
    out["Jammu & Kashmir"] = jk.difference(LADAKH_CUT)
    out.pop("Jammu and Kashmir")
    out[NE_GROUP] = unary_union([out.pop(m) for m in NE_MEMBERS])
    return {name: out[name] for name in STATES}


def as_multipolygon(geom):
    if isinstance(geom, Polygon):
        return MultiPolygon([geom])
    parts = [g for g in getattr(geom, "geoms", []) if isinstance(g, Polygon)]
    return MultiPolygon(parts)


def write_geometry(regions, tolerance_km):
    fwd = Transformer.from_crs("EPSG:4326", PROJ, always_xy=True)
    names = list(regions)
    projected = [transform(fwd.transform, regions[n]) for n in names]
    simplified = coverage_simplify(projected, tolerance_km)
    features = []
    for name, geom in zip(names, simplified):
        geom = as_multipolygon(geom)
        # Drop slivers the simplification reduced to nothing useful.
        geom = MultiPolygon([p for p in geom.geoms if p.area > 1.0])
        gj = mapping(geom)
        gj["coordinates"] = [[[[round(x, 3), round(y, 3)] for x, y in ring]
                              for ring in poly] for poly in gj["coordinates"]]
        features.append({"type": "Feature", "properties": {"name": name}, "geometry": gj})
    fc = {"type": "FeatureCollection",
          "crs_note": "planar km, " + PROJ,
          "features": features}
    with open(OUT / "regions.geojson", "w") as fh:
        json.dump(fc, fh, separators=(",", ":"))
        fh.write("\n")


def age_fractions():
    total = sum(AGE_MILLIONS)
    fr = [round(v / total, 6) for v in AGE_MILLIONS]
    fr[-1] = round(1.0 - sum(fr[:-1]), 6)
    return fr


def write_tables():
    fr = ";".join(f"{v:.6f}" for v in age_fractions())
    with open(OUT / "states.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["name", "population", "cluster_quota", "initial_infected",
                    "move_stddev_km", "age_bin_fractions", "area_km2"])
        for name, (pop, quota, inf, area) in STATES.items():
            w.writerow([name, pop, quota, inf, f"{MOVE_STDDEV_KM:.1f}", fr, area])

    names = list(STATES)
    with open(OUT / "migration.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["origin"] + names)
        for o in names:
            row = MIGRATION_THOUSANDS.get(o, {})
            w.writerow([o] + [row.get(d, 0) * 1000 for d in names])

    top = max(CASE_SHARE_PCT)
    with open(OUT / "age_risk.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["age_bin", "relative_weight"])
        for b, s in zip(AGE_BINS, CASE_SHARE_PCT):
            w.writerow([b, f"{s / top:.6f}"])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("source", help="datamaps ind.json")
    ap.add_argument("--tolerance-km", type=float, default=1.0)
    args = ap.parse_args()

    OUT.mkdir(parents=True, exist_ok=True)
    regions = regroup(load_source(args.source))
    geod = Geod(ellps="WGS84")
    for name, geom in regions.items():
        a = abs(geod.geometry_area_perimeter(geom)[0]) / 1e6
        print(f"{name:55s} geodesic {a:10.0f} km2   official {STATES[name][3]:8d}")
    write_geometry(regions, args.tolerance_km)
    write_tables()
    print(f"wrote {OUT}")


if __name__ == "__main__":
    main()
