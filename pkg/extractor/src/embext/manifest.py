"""JSON-lines manifest reader: one utterance per line.

Only the fields the extractor needs are required (id always; audio for
the speech modality, transcript for the text modality); unknown fields
pass through untouched.
"""

import json
from dataclasses import dataclass
from pathlib import Path

from .errors import ExtractorError


@dataclass(frozen=True)
class Utterance:
    id: str
    audio_path: str
    transcript: str


def read_manifest(path):
    utterances = []
    seen = set()
    base = Path(path).parent
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ExtractorError(f"{path} line {lineno}: {exc}")
            if "id" not in row:
                raise ExtractorError(f"{path} line {lineno}: missing 'id'")
            utt_id = str(row["id"])
            if utt_id in seen:
                raise ExtractorError(f"{path} line {lineno}: duplicate id "
                                     f"{utt_id!r}")
            seen.add(utt_id)
            # relative audio paths resolve against the manifest's directory
            audio = str(row.get("audio", ""))
            if audio and not Path(audio).is_absolute():
                audio = str(base / audio)
            utterances.append(Utterance(
                id=utt_id,
                audio_path=audio,
                transcript=str(row.get("transcript", ""))))
    return utterances
