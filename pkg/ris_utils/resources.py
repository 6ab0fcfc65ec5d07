import json
import os

RESOURCES_DIR = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), 'resources')


def dict_to_variables(obj, file_path: str):
    with open(file_path, encoding='utf-8') as f:
        _dict = json.load(f)
        setattr(obj, 'json', _dict)

        for k, v in _dict.items():
            setattr(obj, k, v)


class Resource:
    def __init__(self, file_name: str):
        dict_to_variables(self, os.path.join(RESOURCES_DIR, file_name))


class Plots(Resource):
    def __init__(self):
        super().__init__('plots.json')


class CsvSchema(Resource):
    def __init__(self):
        super().__init__('csv_schema.json')


plots = Plots()
csv_schema = CsvSchema()
