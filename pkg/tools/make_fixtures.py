"""Regenerate the committed files under fixtures/.

Everything here is deterministic: the hash encoder is seedless-pure, record
order is fixed, and all writers are atomic, so rerunning the script leaves
the fixture bytes unchanged. Company names and figures are fictional; the
taxonomy rows are a small slice of the public NAICS coding scheme, including
the combined manufacturing sector code 31-33 whose children need an explicit
parent reference.

Usage: python3 tools/make_fixtures.py [--dest DIR]
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from emitree.corpus import PreprocessConfig, preprocess
from emitree.embedding import FORMAT_JSONL, EmbeddingStore, write_embeddings
from emitree.ioutil import write_text_atomic
from emitree.synth import hash_encoder
from emitree.taxonomy import build_taxonomy, parse_taxonomy

DIM = 64

TAXONOMY_ROWS = [
    # (code, level, title, description, explicit parent or None)
    ("11", 2, "Agriculture, Forestry, Fishing and Hunting",
     "Growing crops, raising animals, harvesting timber, and harvesting fish "
     "from farms, ranches, or natural habitats", None),
    ("31-33", 2, "Manufacturing",
     "Mechanical, physical, or chemical transformation of materials, "
     "substances, or components into new products in plants and factories", None),
    ("52", 2, "Finance and Insurance",
     "Financial transactions and facilitating them: raising funds, pooling "
     "risk, intermediating credit, and underwriting", None),
    ("54", 2, "Professional, Scientific, and Technical Services",
     "Specialized professional work performed for clients: legal, accounting, "
     "engineering, design, consulting, and research", None),
    ("111", 3, "Crop Production",
     "Growing crops mainly for food and fiber on farms, orchards, groves, "
     "greenhouses, and nurseries", None),
    ("112", 3, "Animal Production and Aquaculture",
     "Raising or fattening animals and finfish and shellfish for sale of "
     "animals or animal products", None),
    ("311", 3, "Food Manufacturing",
     "Transforming livestock and agricultural products into products for "
     "intermediate or final food consumption", "31-33"),
    ("325", 3, "Chemical Manufacturing",
     "Transforming organic and inorganic raw materials by a chemical process "
     "and formulating chemical products", "31-33"),
    ("334", 3, "Computer and Electronic Product Manufacturing",
     "Manufacturing computers, computer peripherals, communications "
     "equipment, and similar electronic products and components", "31-33"),
    ("522", 3, "Credit Intermediation and Related Activities",
     "Lending funds raised from depositors or from credit market borrowing "
     "and facilitating such lending", None),
    ("541", 3, "Professional, Scientific, and Technical Services",
     "Processes where human capital is the major input: expertise and "
     "training delivered to clients", None),
    ("111110", 6, "Soybean Farming",
     "Farms growing soybeans or producing soybean seeds in fields", None),
    ("111219", 6, "Other Vegetable and Melon Farming",
     "Farms growing melons or vegetables such as potatoes and greenhouse "
     "vegetable crops", None),
    ("112111", 6, "Beef Cattle Ranching and Farming",
     "Ranches and feedlots raising beef cattle and cattle livestock for "
     "meat", None),
    ("112310", 6, "Chicken Egg Production",
     "Poultry farms raising laying chickens to produce table or hatching "
     "eggs", None),
    ("311230", 6, "Breakfast Cereal Manufacturing",
     "Plants milling grain and manufacturing ready-to-eat breakfast cereal "
     "foods", None),
    ("311411", 6, "Frozen Fruit, Juice, and Vegetable Manufacturing",
     "Plants processing and freezing fruit, fruit juices, and vegetables for "
     "food", None),
    ("325110", 6, "Petrochemical Manufacturing",
     "Plants manufacturing petrochemicals such as ethylene and propylene "
     "from refined petroleum or liquid hydrocarbons", None),
    ("325411", 6, "Medicinal and Botanical Manufacturing",
     "Plants manufacturing uncompounded medicinal chemicals and "
     "pharmaceutical ingredients", None),
    ("334111", 6, "Electronic Computer Manufacturing",
     "Plants manufacturing electronic computers such as servers, laptops, "
     "and mainframe computer hardware", None),
    ("334220", 6, "Radio, Television, and Wireless Communications Equipment",
     "Plants manufacturing broadcast and wireless communications equipment "
     "such as transmitters and antennas", None),
    ("522110", 6, "Commercial Banking",
     "Banks accepting demand deposits and making commercial, industrial, and "
     "consumer loans", None),
    ("522210", 6, "Credit Card Issuing",
     "Institutions issuing credit cards and extending the associated "
     "consumer credit lines", None),
    ("541330", 6, "Engineering Services",
     "Firms applying physical laws and principles of engineering to the "
     "design of structures, machines, and systems", None),
    ("541511", 6, "Custom Computer Programming Services",
     "Firms writing, modifying, testing, and supporting custom software to "
     "meet the needs of a particular client", None),
]

ENTERPRISES = [
    # (id, name, description, naics labels, revenue_busd, reported_mt)
    ("e-01", "Harvest Pines Agricultural",
     "We grow soybeans and produce certified soybean seed across irrigated "
     "fields and contract farms", ["111110"], 2.4, 1.1),
    ("e-02", "Verdant Valley Produce",
     "Greenhouse vegetable crops and melon farming with year-round potato "
     "and leaf vegetable production", ["111219"], 1.2, 0.6),
    ("e-03", "Prairie Ridge Cattle",
     "Beef cattle ranching with feedlots raising livestock cattle for "
     "premium meat programs", ["112111"], 3.1, 4.2),
    ("e-04", "Morning Roost Farms",
     "Poultry farms with laying chickens producing table eggs and hatching "
     "eggs at scale", ["112310"], 0.9, 0.8),
    ("e-05", "Golden Flake Foods",
     "We mill grain and manufacture ready-to-eat breakfast cereal foods and "
     "toasted flakes", ["311230"], 5.6, 2.9),
    ("e-06", "Polar Orchard Packers",
     "Processing and freezing fruit, fruit juices, and vegetables into "
     "frozen food cases", ["311411"], 2.2, 1.3),
    ("e-07", "Cobalt Reef Chemicals",
     "Petrochemical plants manufacturing ethylene and propylene from "
     "refined petroleum feedstocks", ["325110"], 12.5, 18.4),
    ("e-08", "Silverleaf Therapeutics",
     "Manufacturing uncompounded medicinal chemicals and active "
     "pharmaceutical ingredients for drug makers", ["325411"], 7.8, 2.1),
    ("e-09", "Quanta Circuit Works",
     "Manufacturing electronic computers including rack servers, laptops, "
     "and mainframe hardware", ["334111"], 21.0, 1.9),
    ("e-10", "Beacon Wave Systems",
     "Broadcast and wireless communications equipment: transmitters, "
     "antennas, and studio links", ["334220"], 4.4, 0.7),
    ("e-11", "Ledger Bridge Bank",
     "Commercial banking with demand deposits, industrial lending, and "
     "consumer loans", ["522110"], 9.3, 0.4),
    ("e-12", "Crest Card Services",
     "Issuing credit cards and extending revolving consumer credit lines "
     "with loyalty programs", ["522210"], 3.8, 0.2),
    ("e-13", "Trussline Engineering",
     "Engineering services firm designing structures, machines, and civil "
     "systems for infrastructure clients", ["541330"], 1.7, 0.1),
    ("e-14", "Kitefall Software",
     "Writing, modifying, testing, and supporting custom software and "
     "computer programming for clients", ["541511"], 2.9, 0.05),
    ("e-15", "Aurora Holdings",
     "Diversified holding group with positions across farming, finance, and "
     "equipment ventures", [], 6.0, 3.3),
    ("e-16", "Glasswing Research Cooperative",
     "Member-funded engineering services cooperative for structural design "
     "research", ["541330"], None, None),
]

INTENSITY_ROWS = [
    # (code, intensity in Mt per B$ of revenue, region)
    ("11", 0.50, ""),
    ("111", 0.41, ""),
    ("111110", 0.46, ""),
    ("112", 1.35, ""),
    ("31-33", 0.75, ""),
    ("311", 0.60, ""),
    ("311230", 0.52, ""),
    ("325", 1.47, ""),
    ("334111", 0.091, ""),
    ("52", 0.04, ""),
    ("522110", 0.043, ""),
    ("522110", 0.039, "EU"),
    ("54", 0.03, ""),
    ("541", 0.026, ""),
]

# Published case-study table, printed figures kept verbatim: revenue in B$,
# intensity in Mt per B$, estimated and reported emissions in Mt, and the
# absolute percentage error the source prints for each row.
CASE_ROWS = [
    ("Apple", 383.00, 0.0388, 15.34, 15.60, 1.60, "Factor bias"),
    ("John Deere", 15.50, 5.7155, 91.25, 97.00, 5.93, "Misclassified"),
    ("Air Canada", 12.74, 1.6340, 21.44, 19.63, 9.23, "Factor bias"),
    ("Tencent", 86.00, 0.0588, 5.06, 5.79, 10.04, "Factor bias"),
    ("Google", 305.63, 0.0388, 11.89, 14.30, 16.87, "Factor bias"),
    ("Microsoft", 227.58, 0.0865, 20.28, 17.16, 18.22, "Misclassified"),
    ("Telsa", 96.77, 0.3988, 39.75, 48.91, 18.72, "Factor bias"),
    ("Nike", 49.10, 0.1446, 7.32, 10.03, 27.05, "Factor bias"),
    ("NVIDIA", 26.97, 0.0572, 1.59, 2.24, 29.06, "Factor bias"),
    ("Meta", 131.90, 0.0865, 11.78, 8.45, 39.14, "Factor bias"),
    ("Murphy Oil", 3.46, 3.3522, 11.95, 24.30, 50.84, "Cross sector"),
    ("ADM", 93.00, 1.7791, 170.42, 107.00, 59.27, "Cross sector"),
    ("Dole", 8.00, 0.3052, 2.52, 7.00, 64.07, "Cross sector"),
    ("Shell", 381.31, 1.8691, 734.10, 2048.00, 64.16, "Cross sector"),
    ("Toyota", 307.00, 0.3988, 126.11, 575.73, 78.09, "Cross sector"),
    ("Vinci", 49.40, 0.0538, 2.74, 12.98, 78.89, "Cross sector"),
    ("Zentis", 0.46, 0.2207, 0.11, 0.72, 85.29, "Cross sector"),
    ("Amazon", 574.00, 0.0388, 23.03, 68.82, 90.65, "Cross sector"),
    ("Samsung", 194.00, 0.0444, 8.88, 124.72, 92.88, "Cross sector"),
    ("FedEx", 90.40, 0.0008, 0.08, 22.98, 99.66, "Cross sector"),
]

STOPWORDS = [
    "a", "an", "and", "are", "as", "at", "by", "for", "from", "in", "into",
    "is", "of", "on", "or", "such", "the", "their", "to", "we", "with",
]

RUN_CONFIG = {
    "seed": 42,
    "out": "out",
    "taxonomy": "taxonomy_small.jsonl",
    "enterprises": "enterprises_small.jsonl",
    "stopwords": "stopwords.txt",
    "intensities": "intensities_small.csv",
    "cases": "cases20.csv",
    "case_claimed_mean_ape": 45.88,
    "level_namespaces": {"2": "level2", "3": "level3", "6": "level6"},
    "doc_embeddings": {
        "level2": "docs_level2.emb",
        "level3": "docs_level3.emb",
        "level6": "docs_level6.emb",
    },
    "query_embeddings": {
        "level2": "queries_level2.jsonl",
        "level3": "queries_level3.jsonl",
        "level6": "queries_level6.jsonl",
    },
    "beam": {"k": 3, "final_list_size": 10},
    "split": {"ratios": [0.8, 0.1, 0.1]},
    "train": {
        "learning_rate": 0.05,
        "epochs": 25,
        "batch_size": 4,
        "scale": 1.0,
        "namespaces": ["level6"],
    },
    "eval": {"ks": [1, 2, 3, 7], "ablation_dim": DIM},
}


def jsonl(records) -> str:
    return "".join(json.dumps(record, ensure_ascii=False) + "\n" for record in records)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument(
        "--dest",
        default=str(Path(__file__).resolve().parents[1] / "fixtures"),
        help="directory to write fixtures into",
    )
    args = parser.parse_args()
    dest = Path(args.dest)
    dest.mkdir(parents=True, exist_ok=True)

    tax_records = []
    for code, level, title, description, parent in TAXONOMY_ROWS:
        record = {"code": code, "level": level, "title": title, "description": description}
        if parent is not None:
            record["parent"] = parent
        tax_records.append(record)
    write_text_atomic(dest / "taxonomy_small.jsonl", jsonl(tax_records))

    ent_records = []
    for eid, name, description, labels, revenue, reported in ENTERPRISES:
        record = {"id": eid, "name": name, "description": description, "naics": labels}
        if revenue is not None:
            record["revenue_busd"] = revenue
        if reported is not None:
            record["reported_emissions_mt"] = reported
        ent_records.append(record)
    write_text_atomic(dest / "enterprises_small.jsonl", jsonl(ent_records))

    lines = ["code,intensity,region"]
    lines += [f"{code},{intensity},{region}" for code, intensity, region in INTENSITY_ROWS]
    write_text_atomic(dest / "intensities_small.csv", "\n".join(lines) + "\n")

    lines = ["company,revenue_busd,intensity,estimated_mt,reported_mt,ape_pct,annotation"]
    for company, revenue, intensity, estimated, reported, ape, note in CASE_ROWS:
        lines.append(f"{company},{revenue},{intensity},{estimated},{reported},{ape},{note}")
    write_text_atomic(dest / "cases20.csv", "\n".join(lines) + "\n")

    write_text_atomic(dest / "stopwords.txt", "\n".join(STOPWORDS) + "\n")

    tax = parse_taxonomy(dest / "taxonomy_small.jsonl")
    config = PreprocessConfig(stopwords=frozenset(STOPWORDS))
    encode = hash_encoder(DIM, seed=0)

    for level in tax.levels:
        namespace = f"level{level}"
        entries = [
            (node.code, encode(preprocess(f"{node.title} {node.description}", config)))
            for node in tax.nodes_at_level(level)
        ]
        store = EmbeddingStore.from_entries(namespace, DIM, entries)
        write_embeddings(store, dest / f"docs_{namespace}.emb")

    query_entries = [
        (eid, encode(preprocess(description, config)))
        for eid, _name, description, _labels, _rev, _rep in ENTERPRISES
    ]
    for level in tax.levels:
        namespace = f"level{level}"
        store = EmbeddingStore.from_entries(namespace, DIM, query_entries)
        write_embeddings(store, dest / f"queries_{namespace}.jsonl", format=FORMAT_JSONL)

    write_text_atomic(
        dest / "run_config.json", json.dumps(RUN_CONFIG, indent=2, sort_keys=True) + "\n"
    )
    print(f"wrote fixtures to {dest}")


if __name__ == "__main__":
    main()
