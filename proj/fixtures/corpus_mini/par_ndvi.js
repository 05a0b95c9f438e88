// Two independent NDVI layers; neither depends on the other.
var img1 = ee.Image('LANDSAT/LC08/C01/T1_TOA/LC08_044034_20140318');
var ndvi1 = img1.normalizedDifference(['B5', 'B4']);
Map.addLayer(ndvi1, {min: 0, max: 1}, 'NDVI 2014');

var img2 = ee.Image('LANDSAT/LC08/C01/T1_TOA/LC08_044034_20170606');
var ndvi2 = img2.normalizedDifference(['B5', 'B4']);
Map.addLayer(ndvi2, {min: 0, max: 1}, 'NDVI 2017');
